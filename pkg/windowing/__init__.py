from .grids import impute, resample_to_grid
from .segments import Pipeline, WindowSegment, WindowSpec, quarter_step, segment, segment_cohort, window_count
from .storage import load_windows, write_windows
