from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import check_gradients
from .layers import BatchNorm1d, Conv1d, Dropout, GlobalAvgPool1d, Linear, ReLU, Sequential, Tensor
from .losses import cross_entropy, smooth_l1, weighted_bce
from .model import TwoTowerCnn
from .optim import AdamW, EarlyStopping, ReduceLROnPlateau
from .training import ModalityScaler, TrainConfig, TrainResult, head_for_task, predict, train
