"""
Per-window time-series feature calculators.

Every calculator takes the window grid `x`, its sampling rate and catalog
parameters and returns an ordered {name: value} dict whose keys depend only on
the parameters, never on the data. Values that cannot be computed (series too
short, degenerate input) are NaN and count as missing downstream.
"""
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import signal, stats

FAMILIES = (
    "spectral",
    "quantile",
    "wavelet",
    "trend",
    "autocorrelation",
    "counts",
    "entropy",
    "summary",
    "autoregressive",
    "nonlinear",
    "peaks",
    "boolean",
    "stationarity",
    "similarity",
    "other",
)

CALCULATORS = {}


@dataclass(frozen=True)
class Calculator:
    name: str
    family: str
    func: object

    def __call__(self, x, rate_hz, **params):
        return self.func(np.asarray(x, dtype=float), rate_hz, **params)


def calculator(name, family):
    def register(func):
        if family not in FAMILIES:
            raise ValueError(f"Unknown feature family '{family}'")
        CALCULATORS[name] = Calculator(name, family, func)
        return func
    return register


def _missing(names):
    return {name: np.nan for name in names}


def _flat(x):
    return np.ptp(x) == 0


def decimate_mean(x, max_length):
    """Block-average x so that it has at most max_length samples."""
    if max_length is None or x.size <= max_length:
        return x
    factor = int(np.ceil(x.size / max_length))
    usable = (x.size // factor) * factor
    return x[:usable].reshape(-1, factor).mean(axis=1)


def ricker(points, width):
    """Ricker (Mexican hat) wavelet sampled on `points` samples centred at zero."""
    a = float(width)
    amplitude = 2.0 / (np.sqrt(3.0 * a) * np.pi ** 0.25)
    t = np.arange(points) - (points - 1.0) / 2.0
    tsq = (t / a) ** 2
    return amplitude * (1.0 - tsq) * np.exp(-tsq / 2.0)


# Spectral
@calculator("fft_coefficient", "spectral")
def fft_coefficient(x, rate_hz, coeffs=(0, 1, 2, 3, 4, 5, 6, 7), attrs=("abs", "real", "imag")):
    spectrum = np.fft.rfft(x)
    values = {}
    for k in coeffs:
        for attr in attrs:
            name = f"fft_coefficient__coeff_{k}__attr_{attr}"
            if k >= spectrum.size:
                values[name] = np.nan
            elif attr == "abs":
                values[name] = float(np.abs(spectrum[k]))
            elif attr == "real":
                values[name] = float(spectrum[k].real)
            else:
                values[name] = float(spectrum[k].imag)
    return values


@calculator("fft_aggregated", "spectral")
def fft_aggregated(x, rate_hz):
    names = [f"fft_aggregated__aggtype_{a}" for a in ("centroid", "variance", "skew", "kurtosis")]
    magnitude = np.abs(np.fft.rfft(x))
    total = magnitude.sum()
    if x.size < 4 or total == 0:
        return _missing(names)
    p = magnitude / total
    index = np.arange(magnitude.size)
    centroid = float(index @ p)
    variance = float(((index - centroid) ** 2) @ p)
    if variance == 0:
        return dict(zip(names, (centroid, 0.0, np.nan, np.nan)))
    skew = float(((index - centroid) ** 3) @ p) / variance ** 1.5
    kurtosis = float(((index - centroid) ** 4) @ p) / variance ** 2 - 3.0
    return dict(zip(names, (centroid, variance, skew, kurtosis)))


def _welch(x, rate_hz):
    return signal.welch(x, fs=rate_hz, nperseg=min(x.size, 256))


@calculator("fourier_entropy", "spectral")
def fourier_entropy(x, rate_hz, bins=10):
    name = f"fourier_entropy__bins_{bins}"
    if x.size < 8:
        return {name: np.nan}
    _, psd = _welch(x, rate_hz)
    if psd.max() <= 0:
        return {name: 0.0}
    return {name: binned_entropy(psd / psd.max(), rate_hz, max_bins=bins)[f"binned_entropy__max_bins_{bins}"]}


@calculator("welch_band_power", "spectral")
def welch_band_power(x, rate_hz, n_bands=4):
    names = [f"welch_band_power__band_{i}_of_{n_bands}" for i in range(n_bands)]
    if x.size < 8:
        return _missing(names)
    _, psd = _welch(x, rate_hz)
    # DC bin excluded; remaining bins split into contiguous bands of equal index width
    bands = np.array_split(psd[1:], n_bands)
    return {name: float(band.sum()) if band.size else np.nan for name, band in zip(names, bands)}


@calculator("energy_ratio_by_chunks", "spectral")
def energy_ratio_by_chunks(x, rate_hz, num_segments=4):
    names = [f"energy_ratio_by_chunks__segment_{i}_of_{num_segments}" for i in range(num_segments)]
    full = float(np.sum(x ** 2))
    if full == 0 or x.size < num_segments:
        return _missing(names)
    return {name: float(np.sum(chunk ** 2)) / full for name, chunk in zip(names, np.array_split(x, num_segments))}


# Distribution / quantiles
@calculator("quantile", "quantile")
def quantile(x, rate_hz, q=(0.1, 0.2, 0.25, 0.5, 0.75, 0.8, 0.9)):
    values = np.quantile(x, q)
    return {f"quantile__q_{level}": float(v) for level, v in zip(q, values)}


@calculator("index_mass_quantile", "quantile")
def index_mass_quantile(x, rate_hz, q=(0.25, 0.5, 0.75)):
    names = [f"index_mass_quantile__q_{level}" for level in q]
    mass = np.abs(x)
    total = mass.sum()
    if total == 0:
        return _missing(names)
    centralized = np.cumsum(mass) / total
    return {name: float(np.argmax(centralized >= level) + 1) / x.size for name, level in zip(names, q)}


@calculator("binned_entropy", "quantile")
def binned_entropy(x, rate_hz, max_bins=10):
    hist, _ = np.histogram(x, bins=max_bins)
    probs = hist[hist > 0] / x.size
    return {f"binned_entropy__max_bins_{max_bins}": float(-np.sum(probs * np.log(probs)))}


# Wavelet
@calculator("cwt_coefficients", "wavelet")
def cwt_coefficients(x, rate_hz, widths=(2, 5, 10, 20)):
    values = {}
    for width in widths:
        response = np.convolve(x, ricker(min(10 * width, x.size), width), mode="same")
        values[f"cwt_coefficients__w_{width}__mean_abs"] = float(np.mean(np.abs(response)))
        values[f"cwt_coefficients__w_{width}__max_abs"] = float(np.max(np.abs(response)))
    return values


@calculator("number_cwt_peaks", "wavelet")
def number_cwt_peaks(x, rate_hz, n=5):
    name = f"number_cwt_peaks__n_{n}"
    if _flat(x) or x.size < 2 * n:
        return {name: 0.0}
    return {name: float(len(signal.find_peaks_cwt(x, widths=np.arange(1, n + 1), wavelet=ricker)))}


# Trend
_TREND_ATTRS = ("slope", "intercept", "rvalue", "stderr")


def _linregress(y):
    if y.size < 3:
        return (np.nan,) * 4
    if _flat(y):
        return 0.0, float(y[0]), 0.0, 0.0
    result = stats.linregress(np.arange(y.size, dtype=float), y)
    return float(result.slope), float(result.intercept), float(result.rvalue), float(result.stderr)


@calculator("linear_trend", "trend")
def linear_trend(x, rate_hz):
    return {f"linear_trend__attr_{a}": v for a, v in zip(_TREND_ATTRS, _linregress(x))}


@calculator("agg_linear_trend", "trend")
def agg_linear_trend(x, rate_hz, chunk_s=30.0):
    chunk = max(1, int(round(chunk_s * rate_hz)))
    n_chunks = x.size // chunk
    means = x[: n_chunks * chunk].reshape(n_chunks, chunk).mean(axis=1) if n_chunks else np.empty(0)
    return {
        f"agg_linear_trend__chunk_{chunk_s:g}s__attr_{a}": v for a, v in zip(_TREND_ATTRS, _linregress(means))
    }


# Autocorrelation
def _autocorrelation(x, lag):
    if lag >= x.size:
        return np.nan
    variance = np.var(x)
    if variance == 0:
        return np.nan
    centered = x - x.mean()
    return float(np.sum(centered[:-lag] * centered[lag:]) / ((x.size - lag) * variance))


@calculator("autocorrelation", "autocorrelation")
def autocorrelation(x, rate_hz, lags=tuple(range(1, 11))):
    return {f"autocorrelation__lag_{lag}": _autocorrelation(x, lag) for lag in lags}


@calculator("agg_autocorrelation", "autocorrelation")
def agg_autocorrelation(x, rate_hz, maxlag=10):
    names = [f"agg_autocorrelation__maxlag_{maxlag}__f_{f}" for f in ("mean", "var")]
    acf = np.array([_autocorrelation(x, lag) for lag in range(1, maxlag + 1)])
    if np.isnan(acf).any():
        return _missing(names)
    return dict(zip(names, (float(acf.mean()), float(acf.var()))))


@calculator("partial_autocorrelation", "autocorrelation")
def partial_autocorrelation(x, rate_hz, lags=(1, 2, 3, 4, 5)):
    names = [f"partial_autocorrelation__lag_{lag}" for lag in lags]
    max_lag = max(lags)
    variance = np.var(x)
    if x.size <= 2 * max_lag or variance == 0:
        return _missing(names)
    centered = x - x.mean()
    r = np.array([1.0] + [np.sum(centered[:-k] * centered[k:]) / (x.size * variance) for k in range(1, max_lag + 1)])
    # Durbin-Levinson recursion
    pacf = np.zeros(max_lag + 1)
    phi = np.zeros((max_lag + 1, max_lag + 1))
    phi[1, 1] = pacf[1] = r[1]
    for k in range(2, max_lag + 1):
        previous = phi[k - 1, 1:k]
        denominator = 1.0 - previous @ r[1:k]
        if denominator == 0:
            return _missing(names)
        phi[k, k] = (r[k] - previous @ r[k - 1:0:-1]) / denominator
        phi[k, 1:k] = previous - phi[k, k] * previous[::-1]
        pacf[k] = phi[k, k]
    return {name: float(pacf[lag]) for name, lag in zip(names, lags)}


# Counts / crossings
@calculator("count_above_below_mean", "counts")
def count_above_below_mean(x, rate_hz):
    mean = x.mean()
    return {"count_above_mean": float(np.sum(x > mean)), "count_below_mean": float(np.sum(x < mean))}


@calculator("range_count", "counts")
def range_count(x, rate_hz, ranges=((-1.0, 1.0), (0.0, 0.5), (0.5, 1.0))):
    return {f"range_count__min_{lo:g}__max_{hi:g}": float(np.sum((x >= lo) & (x < hi))) for lo, hi in ranges}


@calculator("number_crossing_m", "counts")
def number_crossing_m(x, rate_hz, levels=("zero", "mean")):
    values = {}
    for level in levels:
        m = 0.0 if level == "zero" else float(x.mean())
        positive = x > m
        values[f"number_crossing_m__m_{level}"] = float(np.count_nonzero(np.diff(positive)))
    return values


@calculator("ratio_beyond_r_sigma", "counts")
def ratio_beyond_r_sigma(x, rate_hz, r=(0.5, 1.0, 2.0)):
    deviation = np.abs(x - x.mean())
    std = np.std(x)
    return {f"ratio_beyond_r_sigma__r_{level:g}": float(np.mean(deviation > level * std)) for level in r}


# Entropy / complexity
def _match_counts(templates, tolerance, block=256):
    """For each template, number of templates (self included) within Chebyshev distance tolerance."""
    counts = np.empty(templates.shape[0])
    for start in range(0, templates.shape[0], block):
        chunk = templates[start:start + block]
        distance = np.max(np.abs(chunk[:, None, :] - templates[None, :, :]), axis=2)
        counts[start:start + block] = np.sum(distance <= tolerance, axis=1)
    return counts


@calculator("approximate_entropy", "entropy")
def approximate_entropy(x, rate_hz, m=2, r=0.2, max_length=600):
    name = f"approximate_entropy__m_{m}__r_{r:g}"
    x = decimate_mean(x, max_length)
    if x.size <= m + 1:
        return {name: np.nan}
    if _flat(x):
        return {name: 0.0}
    tolerance = r * np.std(x)

    def phi(length):
        templates = sliding_window_view(x, length)
        return float(np.mean(np.log(_match_counts(templates, tolerance) / templates.shape[0])))

    return {name: phi(m) - phi(m + 1)}


@calculator("sample_entropy", "entropy")
def sample_entropy(x, rate_hz, m=2, r=0.2, max_length=600):
    name = f"sample_entropy__m_{m}__r_{r:g}"
    x = decimate_mean(x, max_length)
    if x.size <= m + 1:
        return {name: np.nan}
    if _flat(x):
        # every template matches every other one: -log(1) by convention
        return {name: 0.0}
    tolerance = r * np.std(x)
    n_templates = x.size - m
    matches_m = _match_counts(sliding_window_view(x, m)[:n_templates], tolerance) - 1
    matches_m1 = _match_counts(sliding_window_view(x, m + 1), tolerance) - 1
    b, a = matches_m.sum(), matches_m1.sum()
    if a == 0 or b == 0:
        return {name: np.nan}
    return {name: float(-np.log(a / b))}


@calculator("permutation_entropy", "entropy")
def permutation_entropy(x, rate_hz, order=3, delay=1):
    name = f"permutation_entropy__order_{order}__delay_{delay}"
    span = (order - 1) * delay + 1
    if x.size < span:
        return {name: np.nan}
    embedded = sliding_window_view(x, span)[:, ::delay]
    patterns = np.argsort(embedded, axis=1, kind="stable")
    _, counts = np.unique(patterns, axis=0, return_counts=True)
    probs = counts / counts.sum()
    return {name: float(-np.sum(probs * np.log(probs)))}


@calculator("lempel_ziv_complexity", "entropy")
def lempel_ziv_complexity(x, rate_hz, bins=2):
    name = f"lempel_ziv_complexity__bins_{bins}"
    edges = np.linspace(np.min(x), np.max(x), bins + 1)[1:]
    sequence = np.searchsorted(edges, x, side="left").tobytes()
    width = np.dtype(np.intp).itemsize
    words = set()
    index, length, n = 0, 1, x.size
    while index + length <= n:
        word = sequence[index * width:(index + length) * width]
        if word in words:
            length += 1
        else:
            words.add(word)
            index += length
            length = 1
    return {name: len(words) / n}


@calculator("cid_ce", "entropy")
def cid_ce(x, rate_hz, normalize=(True, False)):
    values = {}
    for flag in normalize:
        series = x
        if flag:
            std = np.std(x)
            series = np.zeros_like(x) if std == 0 else (x - x.mean()) / std
        values[f"cid_ce__normalize_{flag}"] = float(np.sqrt(np.sum(np.diff(series) ** 2)))
    return values


# Summary statistics
@calculator("summary_statistics", "summary")
def summary_statistics(x, rate_hz):
    flat = _flat(x)
    return {
        "mean": float(np.mean(x)),
        "median": float(np.median(x)),
        "variance": float(np.var(x)),
        "standard_deviation": float(np.std(x)),
        "skewness": 0.0 if flat or x.size < 3 else float(stats.skew(x, bias=False)),
        "kurtosis": 0.0 if flat or x.size < 4 else float(stats.kurtosis(x, fisher=True, bias=False)),
        "minimum": float(np.min(x)),
        "maximum": float(np.max(x)),
        "abs_energy": float(np.sum(x ** 2)),
        "mean_abs_change": float(np.mean(np.abs(np.diff(x)))) if x.size > 1 else np.nan,
    }


# Autoregressive
def fit_ar(x, order):
    """Least-squares AR(order) fit with intercept. Returns [intercept, phi_1, ..., phi_order]."""
    lagged = sliding_window_view(x, order + 1)
    target = lagged[:, -1]
    design = np.column_stack([np.ones(target.size), lagged[:, -2::-1]])
    coefficients, *_ = np.linalg.lstsq(design, target, rcond=None)
    return coefficients


@calculator("ar_coefficient", "autoregressive")
def ar_coefficient(x, rate_hz, order=5):
    names = [f"ar_coefficient__coeff_{k}__k_{order}" for k in range(order + 1)]
    if x.size < 2 * (order + 1) or _flat(x):
        return _missing(names)
    return {name: float(value) for name, value in zip(names, fit_ar(x, order))}


# Nonlinear dynamics
def _friedrich_fit(x, m, r):
    if x.size < 2 * r or _flat(x):
        return None
    position, velocity = x[:-1], np.diff(x)
    edges = np.unique(np.quantile(position, np.linspace(0, 1, r + 1)))
    if edges.size < m + 2:
        return None
    bins = np.clip(np.searchsorted(edges, position, side="right") - 1, 0, edges.size - 2)
    occupied = np.unique(bins)
    x_means = np.array([position[bins == b].mean() for b in occupied])
    y_means = np.array([velocity[bins == b].mean() for b in occupied])
    if occupied.size < m + 1:
        return None
    return np.polyfit(x_means, y_means, deg=m)


@calculator("friedrich_coefficients", "nonlinear")
def friedrich_coefficients(x, rate_hz, m=3, r=30):
    names = [f"friedrich_coefficients__coeff_{k}__m_{m}__r_{r}" for k in range(m + 1)]
    coefficients = _friedrich_fit(x, m, r)
    if coefficients is None:
        return _missing(names)
    return {name: float(value) for name, value in zip(names, coefficients)}


@calculator("max_langevin_fixed_point", "nonlinear")
def max_langevin_fixed_point(x, rate_hz, m=3, r=30):
    name = f"max_langevin_fixed_point__m_{m}__r_{r}"
    coefficients = _friedrich_fit(x, m, r)
    if coefficients is None:
        return {name: np.nan}
    roots = np.roots(coefficients)
    real = roots[np.abs(roots.imag) < 1e-9].real
    return {name: float(real.max()) if real.size else np.nan}


# Peaks
@calculator("number_peaks", "peaks")
def number_peaks(x, rate_hz, supports=(1, 3, 5, 10)):
    values = {}
    for n in supports:
        name = f"number_peaks__n_{n}"
        if x.size <= 2 * n:
            values[name] = np.nan
            continue
        center = x[n:-n]
        is_peak = np.ones(center.size, dtype=bool)
        for i in range(1, n + 1):
            is_peak &= center > x[n - i:x.size - n - i]
            is_peak &= center > x[n + i:x.size - n + i]
        values[name] = float(np.sum(is_peak))
    return values


# Boolean indicators
@calculator("duplicates", "boolean")
def duplicates(x, rate_hz):
    return {
        "has_duplicate": float(np.unique(x).size != x.size),
        "has_duplicate_max": float(np.sum(x == np.max(x)) >= 2),
        "has_duplicate_min": float(np.sum(x == np.min(x)) >= 2),
    }


# Stationarity
# MacKinnon (1994) response-surface coefficients, constant-only regression, one series.
_ADF_TAU_MAX, _ADF_TAU_MIN, _ADF_TAU_STAR = 2.74, -18.83, -1.61
_ADF_SMALL_P = (2.1659, 1.4412, 0.038269)
_ADF_LARGE_P = (1.7339, 0.93202, -0.12745, -0.010368)


def adf_pvalue_proxy(statistic):
    """Approximate asymptotic p-value of an ADF t-statistic (constant, no trend)."""
    if statistic > _ADF_TAU_MAX:
        return 1.0
    if statistic < _ADF_TAU_MIN:
        return 0.0
    coefficients = _ADF_SMALL_P if statistic <= _ADF_TAU_STAR else _ADF_LARGE_P
    return float(stats.norm.cdf(np.polyval(coefficients[::-1], statistic)))


@calculator("augmented_dickey_fuller", "stationarity")
def augmented_dickey_fuller(x, rate_hz):
    names = ["augmented_dickey_fuller__attr_teststat", "augmented_dickey_fuller__attr_pvalue", "augmented_dickey_fuller__attr_usedlag"]
    if x.size < 12 or _flat(x):
        return _missing(names)
    lag = min(int(np.floor(12.0 * (x.size / 100.0) ** 0.25)), (x.size - 6) // 3)
    dy = np.diff(x)
    target = dy[lag:]
    columns = [np.ones(target.size), x[lag:-1]]
    columns += [dy[lag - i:-i] for i in range(1, lag + 1)]
    design = np.column_stack(columns)
    coefficients, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    dof = target.size - design.shape[1]
    if rank < design.shape[1] or dof <= 0:
        return _missing(names)
    residuals = target - design @ coefficients
    sigma2 = residuals @ residuals / dof
    covariance = sigma2 * np.linalg.inv(design.T @ design)
    if covariance[1, 1] <= 0:
        return _missing(names)
    statistic = float(coefficients[1] / np.sqrt(covariance[1, 1]))
    return dict(zip(names, (statistic, adf_pvalue_proxy(statistic), float(lag))))


# Similarity
@calculator("query_similarity_count", "similarity")
def query_similarity_count(x, rate_hz, query=None, threshold=0.0):
    name = "query_similarity_count__query_default"
    if not query:
        return {name: np.nan}
    query = np.asarray(query, dtype=float)
    if x.size < query.size:
        return {name: np.nan}
    query = (query - query.mean()) / (query.std() or 1.0)
    windows = sliding_window_view(x, query.size)
    std = windows.std(axis=1, keepdims=True)
    std[std == 0] = 1.0
    normalized = (windows - windows.mean(axis=1, keepdims=True)) / std
    distance = np.sqrt(np.sum((normalized - query) ** 2, axis=1))
    return {name: float(np.sum(distance <= threshold))}


# Other
def _longest_strike(mask):
    best = run = 0
    for flag in mask:
        run = run + 1 if flag else 0
        best = max(best, run)
    return float(best)


@calculator("longest_strike", "other")
def longest_strike(x, rate_hz):
    mean = x.mean()
    return {
        "longest_strike_above_mean": _longest_strike(x > mean),
        "longest_strike_below_mean": _longest_strike(x < mean),
    }


@calculator("mean_second_derivative_central", "other")
def mean_second_derivative_central(x, rate_hz):
    if x.size < 3:
        return {"mean_second_derivative_central": np.nan}
    return {"mean_second_derivative_central": float((x[-1] - x[-2] - x[1] + x[0]) / (2.0 * (x.size - 2)))}


@calculator("time_reversal_asymmetry_statistic", "other")
def time_reversal_asymmetry_statistic(x, rate_hz, lag=1):
    name = f"time_reversal_asymmetry_statistic__lag_{lag}"
    if x.size <= 2 * lag:
        return {name: np.nan}
    x0, x1, x2 = x[: x.size - 2 * lag], x[lag: x.size - lag], x[2 * lag:]
    return {name: float(np.mean(x2 * x2 * x1 - x1 * x0 * x0))}


@calculator("c3", "other")
def c3(x, rate_hz, lag=1):
    name = f"c3__lag_{lag}"
    if x.size <= 2 * lag:
        return {name: np.nan}
    return {name: float(np.mean(x[2 * lag:] * x[lag: x.size - lag] * x[: x.size - 2 * lag]))}
