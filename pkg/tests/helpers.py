import numpy as np

from entropytile.classifier import logistic_gradient, logistic_loss


def blobs(n_per_class, dim, seed, margin_sigma=3.0):
    """Two unit-variance Gaussian blobs whose centres sit ``margin_sigma`` from the separating plane."""
    rng = np.random.default_rng(seed)
    direction = rng.normal(size=dim)
    direction /= np.linalg.norm(direction)
    centre = np.full(dim, 0.5)  # off the origin so the bias has to move
    X1 = rng.normal(size=(n_per_class, dim)) + centre + margin_sigma * direction
    X0 = rng.normal(size=(n_per_class, dim)) + centre - margin_sigma * direction
    X = np.vstack([X1, X0])
    y = np.concatenate([np.ones(n_per_class), np.zeros(n_per_class)])
    return X, y


def gradient_rel_error(seed, h=1e-6):
    """Relative error between the analytic gradient and central differences."""
    rng = np.random.default_rng(seed)
    n, d = int(rng.integers(3, 30)), int(rng.integers(1, 12))
    X = rng.normal(size=(n, d))
    y = rng.integers(0, 2, size=n).astype(float)
    w, b = rng.normal(size=d), float(rng.normal())
    gw, gb = logistic_gradient(w, b, X, y)
    num = np.empty(d + 1)
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        num[i] = (logistic_loss(w + e, b, X, y) - logistic_loss(w - e, b, X, y)) / (2 * h)
    num[d] = (logistic_loss(w, b + h, X, y) - logistic_loss(w, b - h, X, y)) / (2 * h)
    ana = np.append(gw, gb)
    return np.linalg.norm(ana - num) / max(np.linalg.norm(ana), np.linalg.norm(num), 1e-12)
