import numpy as np

from data_model.errors import ValidationError
from neural.layers import Dropout, GlobalAvgPool1d, Linear, ReLU, Sequential, conv_block

TOWER_ARCHITECTURES = {
    "arousal": {"channels": (16, 32, 64), "kernel_size": 5},
    "accel": {"channels": (32, 64, 128, 128), "kernel_size": 7},
}
HEAD_OUTPUTS = {"binary": 1, "categorical": 3, "regression": 1}


class TwoTowerCnn:
    """
    One convolutional tower per modality, each ending in global average pooling;
    the concatenated embeddings feed a fully connected head.

    Inputs are {"arousal": (B, 1, L_a), "accel": (B, 1, L_c)}; output is (B, n_outputs).
    Any non-empty subset of towers may be enabled for ablations.
    """

    def __init__(self, head="binary", towers=("arousal", "accel"), input_lengths=None, hidden=64, dropout=0.3, seed=0, dtype="float32"):
        if head not in HEAD_OUTPUTS:
            raise ValidationError(f"Unknown head '{head}'")
        towers = tuple(towers)
        if not towers or any(t not in TOWER_ARCHITECTURES for t in towers):
            raise ValidationError(f"Invalid tower selection {towers}")
        self.head_kind = head
        self.towers = towers
        self.input_lengths = dict(input_lengths or {"arousal": 180, "accel": 4500})
        self.hidden = hidden
        self.dropout = dropout
        self.seed = seed
        self.dtype = np.dtype(dtype)
        self.n_outputs = HEAD_OUTPUTS[head]

        rng = np.random.default_rng(seed)
        self.tower_layers = {}
        self.tower_shapes = {}
        embedding = 0
        for name in towers:
            architecture = TOWER_ARCHITECTURES[name]
            layers, in_channels = [], 1
            for out_channels in architecture["channels"]:
                layers += conv_block(in_channels, out_channels, architecture["kernel_size"], rng, self.dtype)
                in_channels = out_channels
            layers.append(GlobalAvgPool1d())
            self.tower_layers[name] = Sequential(*layers)
            self.tower_shapes[name] = self.expected_lengths(name, self.input_lengths[name])
            embedding += in_channels
        self.embedding_dim = embedding
        self.head = Sequential(
            Linear(embedding, hidden, rng=rng, dtype=self.dtype),
            ReLU(),
            Dropout(dropout, rng=np.random.default_rng(rng.integers(2 ** 32))),
            Linear(hidden, self.n_outputs, rng=rng, dtype=self.dtype),
        )

    def expected_lengths(self, tower, input_length):
        """Temporal length after every conv block, starting with the input length."""
        lengths = [input_length]
        for layer in self.tower_layers[tower].layers:
            if hasattr(layer, "output_length"):
                lengths.append(layer.output_length(lengths[-1]))
        return lengths

    def forward(self, inputs, training=False):
        embeddings = []
        for name in self.towers:
            x = np.asarray(inputs[name], dtype=self.dtype)
            if x.ndim != 3 or x.shape[1] != 1 or x.shape[2] != self.input_lengths[name]:
                raise ValidationError(f"{name} input must be (B, 1, {self.input_lengths[name]}), got {x.shape}")
            lengths = iter(self.tower_shapes[name][1:])
            for layer in self.tower_layers[name].layers:
                x = layer.forward(x, training)
                if hasattr(layer, "output_length"):
                    assert x.shape[2] == next(lengths), f"unexpected {name} tower length {x.shape[2]}"
            embeddings.append(x)
        self._split = np.cumsum([e.shape[1] for e in embeddings])[:-1]
        return self.head.forward(np.concatenate(embeddings, axis=1), training)

    def backward(self, grad):
        """Backpropagate the output gradient; returns {tower: gradient w.r.t. its input}."""
        grad = self.head.backward(np.asarray(grad, dtype=self.dtype))
        return {
            name: self.tower_layers[name].backward(part)
            for name, part in zip(self.towers, np.split(grad, self._split, axis=1))
        }

    def parameters(self):
        for name in self.towers:
            for key, tensor in self.tower_layers[name].parameters():
                yield f"{name}.{key}", tensor
        for key, tensor in self.head.parameters():
            yield f"head.{key}", tensor

    def buffers(self):
        for name in self.towers:
            for key, tensor in self.tower_layers[name].buffers():
                yield f"{name}.{key}", tensor

    def state(self):
        """Ordered (name, Tensor) pairs of everything a checkpoint stores."""
        return list(self.parameters()) + list(self.buffers())

    def state_dict(self):
        return {name: tensor.value.copy() for name, tensor in self.state()}

    def load_state_dict(self, state):
        for name, tensor in self.state():
            if name not in state:
                raise ValidationError(f"State is missing '{name}'")
            if state[name].shape != tensor.shape:
                raise ValidationError(f"Shape mismatch for '{name}': {state[name].shape} vs {tensor.shape}")
            tensor.value = np.array(state[name], dtype=tensor.value.dtype)

    def architecture(self):
        return {
            "head": self.head_kind,
            "towers": list(self.towers),
            "input_lengths": self.input_lengths,
            "hidden": self.hidden,
            "dropout": self.dropout,
            "seed": self.seed,
            "dtype": str(self.dtype),
        }

    def __call__(self, inputs, training=False):
        return self.forward(inputs, training)
