from .calculators import CALCULATORS, FAMILIES, calculator
from .catalog import CatalogEntry, FeatureCatalog
from .design_matrix import DesignMatrix, assemble_design_matrix
from .extraction import FeatureVector, extract_all, extract_features, load_features, write_features
