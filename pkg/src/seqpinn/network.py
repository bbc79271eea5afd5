"""PINN architecture: a tanh MLP with optional two-encoder gating.

Flat parameter layout (fixed, also used by the checkpoint format). Every
weight matrix is stored row-major with shape ``(fan_in, fan_out)`` so a layer
computes ``h @ W + b``:

    W_1 (2 x H), b_1 (H)
    W_k (H x H), b_k (H)          for k = 2 .. hidden_layers
    W_out (H x 3), b_out (3)
    W_enc1 (2 x H), b_enc1 (H)    only when attention is enabled
    W_enc2 (2 x H), b_enc2 (H)    only when attention is enabled

With attention enabled every hidden layer is gated between two input
encodings, ``E1 = tanh(x W_enc1 + b_enc1)`` and ``E2 = tanh(x W_enc2 + b_enc2)``:

    z_k = tanh(h_{k-1} W_k + b_k)
    h_k = (1 - z_k) * E1 + z_k * E2

where ``h_0`` is the input point. Without attention ``h_k = z_k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateInputError, StructureError

INPUT_DIM = 2
OUTPUT_DIM = 3


@dataclass(frozen=True)
class Architecture:
    hidden_layers: int = 8
    hidden_width: int = 150
    attention: bool = True

    def __post_init__(self):
        if int(self.hidden_layers) < 1 or int(self.hidden_width) < 1:
            raise StructureError(
                f"hidden_layers and hidden_width must be >= 1, got "
                f"{self.hidden_layers} x {self.hidden_width}"
            )

    @property
    def input_dim(self) -> int:
        return INPUT_DIM

    @property
    def output_dim(self) -> int:
        return OUTPUT_DIM

    def layer_dims(self) -> list[int]:
        """Widths from input to output, e.g. ``[2, 150, ..., 150, 3]``."""
        return [INPUT_DIM] + [self.hidden_width] * self.hidden_layers + [OUTPUT_DIM]

    def shapes(self) -> list[tuple[str, tuple[int, ...]]]:
        """(name, shape) of every tensor, in flat order."""
        dims = self.layer_dims()
        out = []
        for k in range(self.hidden_layers):
            out.append((f"W{k + 1}", (dims[k], dims[k + 1])))
            out.append((f"b{k + 1}", (dims[k + 1],)))
        out.append(("W_out", (dims[-2], dims[-1])))
        out.append(("b_out", (dims[-1],)))
        if self.attention:
            for e in (1, 2):
                out.append((f"W_enc{e}", (INPUT_DIM, self.hidden_width)))
                out.append((f"b_enc{e}", (self.hidden_width,)))
        return out

    @property
    def n_params(self) -> int:
        return sum(int(np.prod(s)) for _, s in self.shapes())

    def to_dict(self) -> dict:
        return {
            "hidden_layers": int(self.hidden_layers),
            "hidden_width": int(self.hidden_width),
            "attention": bool(self.attention),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Architecture":
        return cls(int(d["hidden_layers"]), int(d["hidden_width"]), bool(d["attention"]))


@dataclass
class NetworkParams:
    arch: Architecture
    flat: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.flat = np.asarray(self.flat, dtype=np.float64)
        if self.flat.ndim != 1 or self.flat.size != self.arch.n_params:
            raise StructureError(
                f"flat vector has {self.flat.size} entries, architecture "
                f"{self.arch} needs {self.arch.n_params}"
            )

    def tensors(self) -> dict[str, np.ndarray]:
        """Views into ``flat`` keyed by tensor name."""
        out = {}
        i = 0
        for name, shape in self.arch.shapes():
            n = int(np.prod(shape))
            out[name] = self.flat[i:i + n].reshape(shape)
            i += n
        return out

    def copy(self) -> "NetworkParams":
        return NetworkParams(self.arch, self.flat.copy())

    def __eq__(self, other):
        if not isinstance(other, NetworkParams):
            return NotImplemented
        return self.arch == other.arch and np.array_equal(self.flat, other.flat)


def init_network(arch: Architecture, seed: int) -> NetworkParams:
    """Glorot-uniform weights and zero biases, reproducible per seed."""
    rng = np.random.default_rng(seed)
    chunks = []
    for name, shape in arch.shapes():
        if len(shape) == 2:
            limit = np.sqrt(6.0 / (shape[0] + shape[1]))
            chunks.append(rng.uniform(-limit, limit, size=shape).ravel())
        else:
            chunks.append(np.zeros(shape))
    return NetworkParams(arch, np.concatenate(chunks))


def as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != INPUT_DIM:
        raise StructureError(f"points must have shape (n, 2), got {pts.shape}")
    return pts


def forward(params: NetworkParams, points) -> np.ndarray:
    """Network outputs, shape ``(n, 3)`` with columns u, v, p."""
    x = as_points(points)
    t = params.tensors()
    L = params.arch.hidden_layers
    if params.arch.attention:
        e1 = np.tanh(x @ t["W_enc1"] + t["b_enc1"])
        e2 = np.tanh(x @ t["W_enc2"] + t["b_enc2"])
    h = x
    for k in range(1, L + 1):
        z = np.tanh(h @ t[f"W{k}"] + t[f"b{k}"])
        h = (1.0 - z) * e1 + z * e2 if params.arch.attention else z
    return h @ t["W_out"] + t["b_out"]


def average_params(params_list: Sequence[NetworkParams]) -> NetworkParams:
    """Element-wise arithmetic mean of the flat parameter vectors."""
    if len(params_list) == 0:
        raise DegenerateInputError("cannot average an empty list of parameters")
    arch = params_list[0].arch
    for p in params_list[1:]:
        if p.arch != arch:
            raise StructureError(f"mixed architectures: {arch} vs {p.arch}")
    stacked = np.stack([p.flat for p in params_list])
    # offsets from the column minimum, summed in sorted order: independent of
    # list order and exact when all entries agree
    stacked.sort(axis=0)
    base = stacked[0]
    return NetworkParams(arch, base + (stacked - base).sum(axis=0) / len(params_list))
