import logging

import numpy as np

logger = logging.getLogger(__name__)


class AdamW:
    """Adam with decoupled weight decay."""

    def __init__(self, params, lr=1e-3, betas=(0.9, 0.999), eps=1e-8, weight_decay=1e-2):
        self.params = list(params)
        self.lr = lr
        self.betas = tuple(betas)
        self.eps = eps
        self.weight_decay = weight_decay
        self.step_count = 0
        self._m = [np.zeros_like(p.value) for p in self.params]
        self._v = [np.zeros_like(p.value) for p in self.params]

    def zero_grad(self):
        for param in self.params:
            param.zero_grad()

    def step(self):
        self.step_count += 1
        beta1, beta2 = self.betas
        correction1 = 1.0 - beta1 ** self.step_count
        correction2 = 1.0 - beta2 ** self.step_count
        for param, m, v in zip(self.params, self._m, self._v):
            grad = param.grad
            m *= beta1
            m += (1.0 - beta1) * grad
            v *= beta2
            v += (1.0 - beta2) * grad * grad
            update = self.lr * self.weight_decay * param.value
            update = update + self.lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)
            param.value = (param.value - update).astype(param.value.dtype)


class ReduceLROnPlateau:
    """
    Multiply the learning rate by `factor` once the monitored metric has not
    improved for more than `patience` epochs.
    """

    def __init__(self, optimizer, mode="max", factor=0.5, patience=3, threshold=1e-4, min_lr=0.0):
        self.optimizer = optimizer
        self.mode = mode
        self.factor = factor
        self.patience = patience
        self.threshold = threshold
        self.min_lr = min_lr
        self.best = None
        self.num_bad_epochs = 0

    def _is_better(self, metric):
        if self.best is None:
            return True
        if self.mode == "max":
            return metric > self.best + self.threshold * abs(self.best)
        return metric < self.best - self.threshold * abs(self.best)

    def step(self, metric):
        if self._is_better(metric):
            self.best = metric
            self.num_bad_epochs = 0
            return
        self.num_bad_epochs += 1
        if self.num_bad_epochs > self.patience:
            new_lr = max(self.optimizer.lr * self.factor, self.min_lr)
            if new_lr < self.optimizer.lr:
                logger.info("Reducing learning rate to %.3g", new_lr)
            self.optimizer.lr = new_lr
            self.num_bad_epochs = 0


class EarlyStopping:
    def __init__(self, patience=5, mode="max", min_delta=0.0):
        """
        Args:
            patience (int): how many epochs to wait without improvement before stopping
            mode (str): "min" (for loss) or "max" (for AUROC-like metrics)
            min_delta (float): minimum change to qualify as an improvement
        """
        self.patience = patience
        self.mode = mode
        self.min_delta = min_delta
        self.best = None
        self.counter = 0
        self.improved = False
        self.should_stop = False

    def step(self, metric):
        if self.best is None:
            self.best = metric
            self.improved = True
            return False

        improvement = self.best - metric if self.mode == "min" else metric - self.best
        self.improved = improvement > self.min_delta
        if self.improved:
            self.best = metric
            self.counter = 0
        else:
            self.counter += 1
            if self.counter >= self.patience:
                self.should_stop = True
        return self.should_stop
