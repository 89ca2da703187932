"""Truncated power series arithmetic on coefficient arrays ``a[k]`` of x^k."""

import numpy as np


def mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = min(len(a), len(b))
    return np.convolve(a[:n], b[:n])[:n]


def div(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Series quotient a/b; needs b[0] != 0."""
    n = min(len(a), len(b))
    out = np.zeros(n)
    for k in range(n):
        out[k] = (a[k] - np.dot(out[:k], b[k:0:-1])) / b[0]
    return out


def power(a: np.ndarray, alpha: float) -> np.ndarray:
    """a(x)**alpha for real alpha via the J.C.P. Miller recurrence; needs a[0] > 0."""
    n = len(a)
    out = np.zeros(n)
    out[0] = a[0] ** alpha
    for k in range(1, n):
        j = np.arange(1, k + 1)
        out[k] = np.dot(((alpha + 1.0) * j - k) * a[1 : k + 1], out[k - 1 :: -1][:k]) / (k * a[0])
    return out


def integrate(a: np.ndarray, constant: float = 0.0) -> np.ndarray:
    """Antiderivative, truncated to the input length."""
    out = np.empty(len(a))
    out[0] = constant
    out[1:] = a[:-1] / np.arange(1, len(a))
    return out


def derivative(a: np.ndarray) -> np.ndarray:
    out = np.zeros(len(a))
    out[:-1] = a[1:] * np.arange(1, len(a))
    return out


def shift_down(a: np.ndarray) -> np.ndarray:
    """(a(x) - a(0)) / x, keeping the length (last coefficient unknown -> 0)."""
    out = np.zeros(len(a))
    out[:-1] = a[1:]
    return out


def evaluate(a: np.ndarray, x: float) -> float:
    return float(np.polyval(a[::-1], x))
