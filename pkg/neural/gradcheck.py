import numpy as np

ABSOLUTE_TOLERANCE = 1e-7


def _relative_error(analytic, numeric):
    difference = float(np.linalg.norm(analytic - numeric))
    if difference <= ABSOLUTE_TOLERANCE:
        return 0.0
    return difference / max(float(np.linalg.norm(analytic) + np.linalg.norm(numeric)), 1e-12)


def _indices(shape, rng, max_entries):
    indices = list(np.ndindex(shape))
    if max_entries is not None and len(indices) > max_entries:
        chosen = np.sort(rng.choice(len(indices), size=max_entries, replace=False))
        indices = [indices[i] for i in chosen]
    return indices


def _compare(analytic, loss, array, eps, indices):
    """Central differences of loss() w.r.t. array[indices], perturbing array in place."""
    numeric = np.zeros(len(indices))
    for k, index in enumerate(indices):
        original = array[index]
        array[index] = original + eps
        plus = loss()
        array[index] = original - eps
        minus = loss()
        array[index] = original
        numeric[k] = (plus - minus) / (2 * eps)
    picked = np.array([analytic[index] for index in indices], dtype=np.float64)
    return _relative_error(picked, numeric)


def check_gradients(layer, x, training=True, eps=1e-6, seed=0, max_entries=None):
    """
    Compare a layer's backward pass with central finite differences.

    Uses the scalar loss sum(forward(x) * g) for a fixed random g. Run it at
    64-bit precision. Returns {"input": err, "<param>": err, ...} with
    norm-relative errors; `max_entries` checks a random subset of each tensor.
    """
    rng = np.random.default_rng(seed)
    x = np.array(x, dtype=np.float64)
    upstream = rng.standard_normal(layer.forward(x, training).shape)

    def loss():
        return float(np.sum(layer.forward(x, training) * upstream))

    layer.forward(x, training)
    analytic_input = layer.backward(upstream)
    analytic_params = {name: np.array(tensor.grad, dtype=np.float64) for name, tensor in layer.parameters()}

    errors = {"input": _compare(analytic_input, loss, x, eps, _indices(x.shape, rng, max_entries))}
    for name, tensor in layer.parameters():
        errors[name] = _compare(analytic_params[name], loss, tensor.value, eps, _indices(tensor.shape, rng, max_entries))
    return errors


def check_model_gradients(model, inputs, training=True, eps=1e-6, seed=0, max_entries=20):
    """check_gradients for a TwoTowerCnn built with dtype float64 and dropout 0."""
    rng = np.random.default_rng(seed)
    inputs = {name: np.array(value, dtype=np.float64) for name, value in inputs.items()}
    upstream = rng.standard_normal(model.forward(inputs, training).shape)

    def loss():
        return float(np.sum(model.forward(inputs, training) * upstream))

    for _, tensor in model.parameters():
        tensor.zero_grad()
    model.forward(inputs, training)
    input_grads = model.backward(upstream)
    analytic_params = {name: np.array(tensor.grad, dtype=np.float64) for name, tensor in model.parameters()}

    errors = {}
    for name, x in inputs.items():
        errors[f"input.{name}"] = _compare(input_grads[name], loss, x, eps, _indices(x.shape, rng, max_entries))
    for name, tensor in model.parameters():
        errors[name] = _compare(analytic_params[name], loss, tensor.value, eps, _indices(tensor.shape, rng, max_entries))
    return errors


def check_loss_gradient(loss_fn, predictions, *args, eps=1e-6):
    """Relative error between a loss's returned gradient and central differences of its value."""
    predictions = np.array(predictions, dtype=np.float64)
    _, analytic = loss_fn(predictions, *args)
    analytic = np.asarray(analytic, dtype=np.float64).reshape(predictions.shape)

    def loss():
        return loss_fn(predictions, *args)[0]

    return _compare(analytic, loss, predictions, eps, list(np.ndindex(predictions.shape)))
