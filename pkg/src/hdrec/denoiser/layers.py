"""Array-level neural net primitives with explicit backward passes.

Everything works on float64 NHWC batches.  Each layer is a tiny stateless
object: parameters live in a flat name->array dict owned by the model, and
``forward`` returns whatever the matching ``backward`` needs as its cache.
Convolutions use the im2col trick (window view + one GEMM); col2im in the
backward pass is a k*k loop of strided slice additions.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def fan_in_uniform(gen: np.random.Generator, shape: tuple, fan_in: int) -> np.ndarray:
    limit = np.sqrt(1.0 / fan_in)
    return gen.uniform(-limit, limit, size=shape).astype(np.float64)


class Conv:
    """k x k convolution, SAME padding for odd kernels, optional stride."""

    def __init__(self, name: str, kernel: int, cin: int, cout: int, stride: int = 1):
        self.name = name
        self.kernel = kernel
        self.cin = cin
        self.cout = cout
        self.stride = stride
        self.pad = (kernel - 1) // 2

    def param_shapes(self) -> dict:
        return {
            f"{self.name}.w": (self.kernel, self.kernel, self.cin, self.cout),
            f"{self.name}.b": (self.cout,),
        }

    def init(self, params: dict, gen: np.random.Generator) -> None:
        fan_in = self.kernel * self.kernel * self.cin
        params[f"{self.name}.w"] = fan_in_uniform(
            gen, (self.kernel, self.kernel, self.cin, self.cout), fan_in
        )
        params[f"{self.name}.b"] = np.zeros(self.cout, dtype=np.float64)

    def _cols(self, x: np.ndarray):
        k, s, p = self.kernel, self.stride, self.pad
        xp = np.pad(x, ((0, 0), (p, p), (p, p), (0, 0))) if p else x
        win = sliding_window_view(xp, (k, k), axis=(1, 2))[:, ::s, ::s]
        n, ho, wo = win.shape[:3]
        # (N, Ho, Wo, C, k, k) -> (N*Ho*Wo, k*k*C) matching w's (k, k, C) order
        cols = win.transpose(0, 1, 2, 4, 5, 3).reshape(n * ho * wo, k * k * self.cin)
        return cols, (n, ho, wo), xp.shape

    def forward(self, params: dict, x: np.ndarray):
        w = params[f"{self.name}.w"]
        b = params[f"{self.name}.b"]
        cols, (n, ho, wo), _ = self._cols(x)
        y = cols @ w.reshape(-1, self.cout) + b
        return y.reshape(n, ho, wo, self.cout), x

    def backward(self, params: dict, cache, dy: np.ndarray, grads: dict):
        x = cache
        k, s, p = self.kernel, self.stride, self.pad
        w = params[f"{self.name}.w"]
        cols, (n, ho, wo), xp_shape = self._cols(x)
        dy2 = dy.reshape(n * ho * wo, self.cout)
        grads[f"{self.name}.w"] = (cols.T @ dy2).reshape(w.shape)
        grads[f"{self.name}.b"] = dy2.sum(axis=0)
        dcols = (dy2 @ w.reshape(-1, self.cout).T).reshape(n, ho, wo, k, k, self.cin)
        dxp = np.zeros(xp_shape, dtype=np.float64)
        for i in range(k):
            for j in range(k):
                dxp[:, i : i + ho * s : s, j : j + wo * s : s, :] += dcols[:, :, :, i, j, :]
        if p:
            return dxp[:, p : p + x.shape[1], p : p + x.shape[2], :]
        return dxp


class ConvTranspose2x:
    """2x upsampling via a 2x2 stride-2 transposed convolution (no overlap)."""

    def __init__(self, name: str, cin: int, cout: int):
        self.name = name
        self.cin = cin
        self.cout = cout

    def param_shapes(self) -> dict:
        return {
            f"{self.name}.w": (2, 2, self.cin, self.cout),
            f"{self.name}.b": (self.cout,),
        }

    def init(self, params: dict, gen: np.random.Generator) -> None:
        # Each output pixel sees exactly one input position, so fan-in is cin.
        params[f"{self.name}.w"] = fan_in_uniform(
            gen, (2, 2, self.cin, self.cout), self.cin
        )
        params[f"{self.name}.b"] = np.zeros(self.cout, dtype=np.float64)

    def forward(self, params: dict, x: np.ndarray):
        w = params[f"{self.name}.w"]
        b = params[f"{self.name}.b"]
        n, h, wd, _ = x.shape
        wm = w.transpose(2, 0, 1, 3).reshape(self.cin, 4 * self.cout)
        t = (x.reshape(-1, self.cin) @ wm).reshape(n, h, wd, 2, 2, self.cout)
        y = t.transpose(0, 1, 3, 2, 4, 5).reshape(n, 2 * h, 2 * wd, self.cout) + b
        return y, x

    def backward(self, params: dict, cache, dy: np.ndarray, grads: dict):
        x = cache
        n, h, wd, _ = x.shape
        w = params[f"{self.name}.w"]
        wm = w.transpose(2, 0, 1, 3).reshape(self.cin, 4 * self.cout)
        dt = (
            dy.reshape(n, h, 2, wd, 2, self.cout)
            .transpose(0, 1, 3, 2, 4, 5)
            .reshape(-1, 4 * self.cout)
        )
        x2 = x.reshape(-1, self.cin)
        dwm = x2.T @ dt
        grads[f"{self.name}.w"] = dwm.reshape(self.cin, 2, 2, self.cout).transpose(
            1, 2, 0, 3
        )
        grads[f"{self.name}.b"] = dy.sum(axis=(0, 1, 2))
        return (dt @ wm.T).reshape(x.shape)


class LeakyReLU:
    def __init__(self, slope: float = 0.01):
        self.slope = slope

    def forward(self, x: np.ndarray):
        return np.where(x >= 0, x, self.slope * x), x

    def backward(self, cache, dy: np.ndarray):
        x = cache
        return dy * np.where(x >= 0, 1.0, self.slope)


class Tanh:
    def forward(self, x: np.ndarray):
        y = np.tanh(x)
        return y, y

    def backward(self, cache, dy: np.ndarray):
        y = cache
        return dy * (1.0 - y * y)


class AvgPool2x:
    def forward(self, x: np.ndarray):
        n, h, w, c = x.shape
        y = x.reshape(n, h // 2, 2, w // 2, 2, c).mean(axis=(2, 4))
        return y, x.shape

    def backward(self, cache, dy: np.ndarray):
        n, h, w, c = cache
        dx = np.broadcast_to(
            dy[:, :, None, :, None, :] * 0.25, (n, h // 2, 2, w // 2, 2, c)
        )
        return dx.reshape(n, h, w, c)
