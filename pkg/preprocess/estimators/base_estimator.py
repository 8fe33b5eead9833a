from abc import ABC, abstractmethod

import numpy as np


class ArousalEstimator(ABC):
    """
    Maps one ArousalFeatureRow to an arousal probability in [0, 1].
    Implementations must return a value in [0, 1] for every finite input.
    """
    name = "abstract"
    version = "0"

    @abstractmethod
    def predict(self, row):
        pass

    def predict_batch(self, matrix, feature_order):
        """
        Probabilities for a (rows, features) matrix whose columns follow feature_order.
        The default implementation loops over predict(); vectorized estimators override it.
        """
        from preprocess.arousal import ArousalFeatureRow

        probabilities = []
        for values in np.asarray(matrix, dtype=float):
            row = ArousalFeatureRow(window_center=0.0, **dict(zip(feature_order, values)))
            probabilities.append(self.predict(row))
        return np.asarray(probabilities, dtype=float)

    @property
    def metadata(self):
        return {"name": self.name, "version": self.version}
