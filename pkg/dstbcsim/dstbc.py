#!/usr/bin/env python3
"""
Orthogonal space-time codebooks, differential encoding and differential
ML detection.

Codewords are unitary L_k x L_k matrices. The transmit convention is
Y^t = Y^{t-1} X^t under a static effective channel, so detection maximizes
Re tr{X (Y^t)^H Y^{t-1}} over the codebook.
"""

import itertools
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from .errors import CodecError

UNITARY_TOLERANCE = 1e-12


def _alamouti(s: Sequence[complex]) -> np.ndarray:
    s1, s2 = s
    return np.array([
        [s1, s2],
        [-np.conj(s2), np.conj(s1)],
    ], dtype=complex) / np.sqrt(2)


def _ostbc4(s: Sequence[complex]) -> np.ndarray:
    s1, s2, s3 = s
    c1, c2, c3 = np.conj(s1), np.conj(s2), np.conj(s3)
    return np.array([
        [s1, s2, s3, 0],
        [-c2, c1, 0, s3],
        [-c3, 0, c1, -s2],
        [0, -c3, c2, s1],
    ], dtype=complex) / np.sqrt(3)


@dataclass(frozen=True)
class OrthogonalDesign:
    """Generator of one orthogonal design"""
    size: int
    n_symbols: int
    generator: Callable[[Sequence[complex]], np.ndarray]
    description: str


DESIGNS: Dict[str, OrthogonalDesign] = {
    'alamouti2': OrthogonalDesign(
        size=2, n_symbols=2, generator=_alamouti,
        description='2x2 Alamouti, rate 1'
    ),
    'ostbc4_rate34': OrthogonalDesign(
        size=4, n_symbols=3, generator=_ostbc4,
        description='4x4 complex orthogonal design, rate 3/4'
    ),
}


def gray_code(m: np.ndarray) -> np.ndarray:
    return m ^ (m >> 1)


def psk_constellation(M_o: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Unit-modulus M_o-PSK points exp(j*2*pi*m/M_o) and the Gray label of each
    point index.
    """
    if M_o < 2 or M_o & (M_o - 1):
        raise CodecError(f"PSK order must be a power of two, got {M_o}")
    indices = np.arange(M_o)
    return np.exp(2j * np.pi * indices / M_o), gray_code(indices)


def indices_to_bits(indices: np.ndarray, labels: np.ndarray, bits_per_symbol: int) -> np.ndarray:
    """Gray-labelled bits, MSB first, flattened over the last axis"""
    words = labels[indices]
    shifts = np.arange(bits_per_symbol - 1, -1, -1)
    bits = (words[..., np.newaxis] >> shifts) & 1
    return bits.reshape(*indices.shape[:-1], -1).astype(np.uint8)


@dataclass
class SpaceTimeCodebook:
    """All codewords of one design over an M_o-PSK alphabet"""
    design: str
    M_o: int
    constellation: np.ndarray   # (M_o,)
    labels: np.ndarray          # (M_o,) Gray labels
    entries: np.ndarray         # (M_o^n_s, L_k, L_k)
    tuples: np.ndarray          # (M_o^n_s, n_s) symbol indices, lexicographic
    A: np.ndarray               # (n_s, L_k, L_k) dispersion of s_i
    B: np.ndarray               # (n_s, L_k, L_k) dispersion of conj(s_i)
    orthogonal: bool

    @property
    def L_k(self) -> int:
        return self.entries.shape[-1]

    @property
    def n_s(self) -> int:
        return self.tuples.shape[-1]

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.M_o))

    @property
    def full_search_cost(self) -> int:
        return self.M_o ** self.n_s

    @property
    def decoupled_cost(self) -> int:
        return self.n_s * self.M_o

    def index_of(self, symbol_indices: np.ndarray) -> np.ndarray:
        """Codebook row of each symbol tuple along the last axis"""
        weights = self.M_o ** np.arange(self.n_s - 1, -1, -1)
        return np.asarray(symbol_indices) @ weights

    def codewords(self, symbol_indices: np.ndarray) -> np.ndarray:
        return self.entries[self.index_of(symbol_indices)]

    def unitarity_errors(self) -> np.ndarray:
        eye = np.eye(self.L_k)
        products = self.entries @ np.conj(np.swapaxes(self.entries, -1, -2))
        return np.linalg.norm(products - eye, axis=(-2, -1))


def build_codebook(M_o: int, design: str) -> SpaceTimeCodebook:
    """Enumerate every codeword of the design for M_o-PSK symbols"""
    if design not in DESIGNS:
        raise CodecError(f"unsupported design {design!r}; valid: {', '.join(DESIGNS)}")
    layout = DESIGNS[design]
    points, labels = psk_constellation(M_o)

    tuples = np.array(list(itertools.product(range(M_o), repeat=layout.n_symbols)), dtype=np.int64)
    entries = np.stack([layout.generator(points[t]) for t in tuples])

    # The design is linear in (s, conj(s)); probing with 1 and j separates the two parts
    A = np.empty((layout.n_symbols, layout.size, layout.size), dtype=complex)
    B = np.empty_like(A)
    for i in range(layout.n_symbols):
        unit = np.zeros(layout.n_symbols, dtype=complex)
        unit[i] = 1.0
        from_real = layout.generator(unit)
        from_imag = layout.generator(1j * unit)
        A[i] = (from_real - 1j * from_imag) / 2
        B[i] = (from_real + 1j * from_imag) / 2

    codebook = SpaceTimeCodebook(
        design=design, M_o=M_o, constellation=points, labels=labels,
        entries=entries, tuples=tuples, A=A, B=B, orthogonal=False,
    )
    codebook.orthogonal = bool(np.all(codebook.unitarity_errors() < UNITARY_TOLERANCE))
    return codebook


def segment_stream(symbols: np.ndarray, n_s: int, G: int) -> np.ndarray:
    """
    Split the last axis of (G-1)*n_s symbols into G-1 contiguous segments.
    Returns (..., G-1, n_s).
    """
    symbols = np.asarray(symbols)
    expected = (G - 1) * n_s
    if symbols.shape[-1] != expected:
        raise CodecError(
            f"stream carries {symbols.shape[-1]} symbols, expected (G-1)*n_s = {expected}"
        )
    return symbols.reshape(*symbols.shape[:-1], G - 1, n_s)


def reorthonormalize(C: np.ndarray) -> np.ndarray:
    """Nearest unitary matrix (polar factor) of every matrix in the batch"""
    U, _, Vh = np.linalg.svd(C)
    return U @ Vh


class EncoderState:
    """Cumulative codewords C^{t-1} for a batch of (UE, stream) pairs"""

    def __init__(self, L_k: int, batch_shape: Tuple[int, ...] = (),
                 reorth_interval: int = 32) -> None:
        self.L_k = L_k
        self.reorth_interval = reorth_interval
        self.C_prev = np.broadcast_to(np.eye(L_k, dtype=complex), (*batch_shape, L_k, L_k)).copy()
        self.t = 0
        self.multiplications = 0

    def differential_encode(self, X: np.ndarray) -> np.ndarray:
        """C^t = C^{t-1} X^t; the result becomes the new C^{t-1}"""
        C_t = self.C_prev @ X
        self.t += 1
        self.multiplications += self.multiplications_per_codeword * int(np.prod(X.shape[:-2]))
        if self.reorth_interval and self.t % self.reorth_interval == 0:
            C_t = reorthonormalize(C_t)
        self.C_prev = C_t
        return C_t

    @property
    def multiplications_per_codeword(self) -> int:
        """Complex multiplications of one C^{t-1} X product"""
        return self.L_k ** 3

    def unitarity_error(self) -> float:
        eye = np.eye(self.L_k)
        products = self.C_prev @ np.conj(np.swapaxes(self.C_prev, -1, -2))
        return float(np.max(np.linalg.norm(products - eye, axis=(-2, -1))))


def rows_for_ap(C_prev: np.ndarray, X: np.ndarray, m: int) -> np.ndarray:
    """Row m (1-based) of C_prev X, batched over the leading axes"""
    L_k = np.shape(C_prev)[-1]
    if not 1 <= m <= L_k:
        raise CodecError(f"row index {m} outside 1..{L_k}")
    return np.einsum('...j,...jq->...q', C_prev[..., m - 1, :], X)


def build_block(rows: Sequence[np.ndarray], N_s: Optional[int] = None) -> np.ndarray:
    """Stack per-stream row vectors into B with stream j on axis -2"""
    if N_s is not None and len(rows) != N_s:
        raise CodecError(f"block needs {N_s} stream rows, got {len(rows)}")
    if not rows:
        raise CodecError("block needs at least one stream row")
    return np.stack(rows, axis=-2)


def extract_stream(Y: np.ndarray, j: int, N_b: int) -> np.ndarray:
    """Rows j*N_b .. (j+1)*N_b - 1 of Y (antenna group j, 0-based) along axis -2"""
    n_rows = Y.shape[-2]
    if j < 0 or (j + 1) * N_b > n_rows:
        raise CodecError(f"stream {j} with group size {N_b} exceeds {n_rows} receive rows")
    return Y[..., j * N_b:(j + 1) * N_b, :]


def correlation(Y_t: np.ndarray, Y_tm1: np.ndarray) -> np.ndarray:
    """D = (Y^t)^H Y^{t-1}"""
    return np.einsum('...ia,...ib->...ab', np.conj(Y_t), Y_tm1)


def correlation_multiplications(N_b: int, L_k: int) -> int:
    """Complex multiplications of one (Y^t)^H Y^{t-1} product per stream"""
    return N_b * L_k ** 2


def detect_ml_full(Y_t: np.ndarray, Y_tm1: np.ndarray,
                   codebook: SpaceTimeCodebook) -> Tuple[np.ndarray, np.ndarray]:
    """
    Exhaustive differential ML detection over all codewords.

    Returns the detected codewords and their symbol-index tuples; ties go
    to the lowest codebook index.
    """
    D = correlation(Y_t, Y_tm1)
    metrics = np.real(np.einsum('nab,...ba->...n', codebook.entries, D))
    best = np.argmax(metrics, axis=-1)
    return codebook.entries[best], codebook.tuples[best]


def decoupled_statistics(Y_t: np.ndarray, Y_tm1: np.ndarray,
                         codebook: SpaceTimeCodebook) -> np.ndarray:
    """z_i with Re tr{X D} = sum_i Re{s_i z_i}, shape (..., n_s)"""
    D = correlation(Y_t, Y_tm1)
    direct = np.einsum('iab,...ba->...i', codebook.A, D)
    conjugate = np.einsum('iab,...ba->...i', codebook.B, D)
    return direct + np.conj(conjugate)


def detect_ml_decoupled(Y_t: np.ndarray, Y_tm1: np.ndarray,
                        codebook: SpaceTimeCodebook) -> np.ndarray:
    """Symbol-by-symbol differential ML detection for orthogonal designs"""
    if not codebook.orthogonal:
        raise CodecError(f"design {codebook.design!r} is not orthogonal; use full search")
    z = decoupled_statistics(Y_t, Y_tm1, codebook)
    metrics = np.real(z[..., np.newaxis] * codebook.constellation)
    return np.argmax(metrics, axis=-1)
