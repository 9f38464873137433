"""Multi-head classifier: a trunk of dense blocks with one prediction
head attached after every block.

The net has N blocks (each a single dense+relu layer) and N heads. Head
n sees the activation after block n and emits a normalized C-class
distribution; head N is the network's final classifier, not a separate
output path. Checkpoints are a line-oriented text format with hex-float
values so round-trips are bit exact.
"""

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadMagicError,
    NumericError,
    ShapeError,
    TruncatedError,
    UnsupportedVersionError,
)
from .nn import DenseLayer, dense_forward, softmax
from .rng import Xorshift64Star

CHECKPOINT_MAGIC = "MHUI-CKPT"
CHECKPOINT_VERSION = 1
_VALUES_PER_LINE = 8

# Head initialization: weights start at HEAD_WEIGHT_GAIN times the usual
# He scale and hidden biases at N(0, HEAD_BIAS_SIGMA^2). Training fits
# the heads to the data region, but these large random components
# persist away from it, so different heads extrapolate differently and
# their disagreement grows with the distance an attack pushes an input
# off the data manifold. With plain small init the heads stay too
# correlated to separate heavily-attacked inputs from clean ones.
HEAD_WEIGHT_GAIN = 3.0
HEAD_BIAS_SIGMA = 2.0
HEAD_OUT_BIAS_SIGMA = 0.0


@dataclass
class MultiHeadNet:
    input_dim: int
    n_classes: int
    blocks: list[DenseLayer]  # relu blocks, len N
    heads: list[list[DenseLayer]]  # per block: [hidden(relu), output(identity)]

    def __post_init__(self):
        if len(self.blocks) != len(self.heads):
            raise ValueError("need exactly one head per block")
        if len(self.blocks) < 2:
            raise ValueError("need at least 2 blocks")
        in_dim = self.input_dim
        for i, (block, head) in enumerate(zip(self.blocks, self.heads)):
            if block.in_dim != in_dim:
                raise ValueError(f"block {i + 1} expects input {block.in_dim}, got {in_dim}")
            if head[0].in_dim != block.out_dim:
                raise ValueError(f"head {i + 1} input width != block {i + 1} output width")
            if head[-1].out_dim != self.n_classes:
                raise ValueError(f"head {i + 1} does not emit {self.n_classes} logits")
            in_dim = block.out_dim

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @property
    def block_widths(self) -> list[int]:
        return [b.out_dim for b in self.blocks]

    @property
    def head_hidden(self) -> int:
        return self.heads[0][0].out_dim

    def final_stack(self) -> list[DenseLayer]:
        """Blocks plus the final head's layers: the plain classifier path."""
        return list(self.blocks) + list(self.heads[-1])


@dataclass
class PredictionSet:
    """Per-head normalized predictions for one input: one row per head."""

    rows: np.ndarray  # (H, C)
    head_ids: list[int]  # 1-based, ascending

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.float64)
        if self.rows.ndim != 2:
            raise ValueError("rows must be a 2-D matrix")
        if self.rows.shape[0] != len(self.head_ids):
            raise ValueError("one head id per row required")
        if len(self.head_ids) < 2:
            raise ValueError("need at least 2 heads (variance needs >= 2 samples)")
        if list(self.head_ids) != sorted(set(self.head_ids)):
            raise ValueError("head ids must be distinct and ascending")
        if np.any(self.rows < 0) or np.any(np.abs(self.rows.sum(axis=1) - 1.0) > 1e-9):
            raise ValueError("every row must lie on the probability simplex")

    @property
    def n_heads(self) -> int:
        return self.rows.shape[0]

    @property
    def n_classes(self) -> int:
        return self.rows.shape[1]


def build_net(
    input_dim: int,
    n_classes: int,
    block_widths: list[int],
    head_hidden: int,
    rng: Xorshift64Star,
) -> MultiHeadNet:
    """Construct a net from one RNG stream.

    Blocks use He init with zero biases. Head layers are deliberately
    wilder (see HEAD_WEIGHT_GAIN / HEAD_BIAS_SIGMA above) to keep the
    heads diverse off the data manifold. Draw order is fixed (blocks
    first, then heads; weights row-major, then biases) so identical
    seeds give identical nets.
    """
    if len(block_widths) < 2:
        raise ValueError("need at least 2 block widths")

    def init_layer(
        out_dim: int, in_dim: int, activation: str, gain: float = 1.0, bias_sigma: float = 0.0
    ) -> DenseLayer:
        scale = gain * np.sqrt((2.0 if activation == "relu" else 1.0) / in_dim)
        w = np.array(rng.normals(out_dim * in_dim), dtype=np.float64).reshape(out_dim, in_dim)
        b = np.zeros(out_dim)
        if bias_sigma > 0.0:
            b = bias_sigma * np.array(rng.normals(out_dim), dtype=np.float64)
        return DenseLayer(w * scale, b, activation)

    blocks = []
    in_dim = input_dim
    for width in block_widths:
        blocks.append(init_layer(width, in_dim, "relu"))
        in_dim = width
    heads = []
    for width in block_widths:
        heads.append(
            [
                init_layer(
                    head_hidden, width, "relu",
                    gain=HEAD_WEIGHT_GAIN, bias_sigma=HEAD_BIAS_SIGMA,
                ),
                init_layer(
                    n_classes, head_hidden, "identity",
                    gain=HEAD_WEIGHT_GAIN, bias_sigma=HEAD_OUT_BIAS_SIGMA,
                ),
            ]
        )
    return MultiHeadNet(input_dim, n_classes, blocks, heads)


def trunk_activations(net: MultiHeadNet, x: np.ndarray) -> list[np.ndarray]:
    """Activations after each block, computed in one pass."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != net.input_dim:
        raise ValueError(f"expected input of length {net.input_dim}, got shape {x.shape}")
    acts = []
    a = x
    for block in net.blocks:
        a = dense_forward(block, a)
        acts.append(a)
    return acts


def head_distribution(net: MultiHeadNet, head_index: int, block_act: np.ndarray) -> np.ndarray:
    """Normalized prediction of head `head_index` (0-based) from its block activation."""
    hidden, out = net.heads[head_index]
    return softmax(dense_forward(out, dense_forward(hidden, block_act)))

def predict_all_heads(net: MultiHeadNet, x: np.ndarray) -> PredictionSet:
    """All per-depth predictions; the trunk is evaluated once and shared."""
    acts = trunk_activations(net, x)
    rows = np.stack([head_distribution(net, i, acts[i]) for i in range(net.n_blocks)])
    return PredictionSet(rows, head_ids=list(range(1, net.n_blocks + 1)))


def predict_final(net: MultiHeadNet, x: np.ndarray) -> np.ndarray:
    """Prediction of the final head only (the plain classifier output)."""
    acts = trunk_activations(net, x)
    return head_distribution(net, net.n_blocks - 1, acts[-1])


def trunk_digest(net: MultiHeadNet) -> str:
    """SHA-256 over all block and final-head parameters (canonical order)."""
    h = hashlib.sha256()
    for layer in list(net.blocks) + list(net.heads[-1]):
        h.update(np.ascontiguousarray(layer.weights).tobytes())
        h.update(np.ascontiguousarray(layer.bias).tobytes())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Checkpoint format (UTF-8 text):
#
#   MHUI-CKPT
#   format_version 1
#   input_dim <D>
#   classes <C>
#   blocks <N>
#   block_widths <w1> ... <wN>
#   head_hidden <H>
#   tensor <name> <dim> [<dim>]     repeated for every parameter tensor
#   <hex floats, 8 per line>
#   ...
#   end
#
# Values use float.hex() so save -> load -> save is byte-identical.
# ---------------------------------------------------------------------------


def _tensor_entries(net: MultiHeadNet) -> list[tuple[str, np.ndarray]]:
    entries = []
    for i, block in enumerate(net.blocks, start=1):
        entries.append((f"block{i}.weights", block.weights))
        entries.append((f"block{i}.bias", block.bias))
    for i, (hidden, out) in enumerate(net.heads, start=1):
        entries.append((f"head{i}.hidden.weights", hidden.weights))
        entries.append((f"head{i}.hidden.bias", hidden.bias))
        entries.append((f"head{i}.out.weights", out.weights))
        entries.append((f"head{i}.out.bias", out.bias))
    return entries


def save_checkpoint(net: MultiHeadNet, path: str) -> None:
    lines = [
        CHECKPOINT_MAGIC,
        f"format_version {CHECKPOINT_VERSION}",
        f"input_dim {net.input_dim}",
        f"classes {net.n_classes}",
        f"blocks {net.n_blocks}",
        "block_widths " + " ".join(str(w) for w in net.block_widths),
        f"head_hidden {net.head_hidden}",
    ]
    for name, tensor in _tensor_entries(net):
        lines.append(f"tensor {name} " + " ".join(str(d) for d in tensor.shape))
        flat = tensor.reshape(-1)
        for start in range(0, flat.shape[0], _VALUES_PER_LINE):
            lines.append(" ".join(float(v).hex() for v in flat[start : start + _VALUES_PER_LINE]))
    lines.append("end")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


class _LineReader:
    def __init__(self, text: str):
        self._lines = text.split("\n")
        self._pos = 0

    def next(self) -> str:
        while self._pos < len(self._lines):
            line = self._lines[self._pos].strip()
            self._pos += 1
            if line:
                return line
        raise TruncatedError("checkpoint ended unexpectedly")


def _header_int(reader: _LineReader, key: str) -> int:
    line = reader.next()
    parts = line.split()
    if len(parts) != 2 or parts[0] != key:
        raise ShapeError(f"expected '{key} <value>' header line, got {line!r}")
    return int(parts[1])


def load_checkpoint(path: str) -> MultiHeadNet:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    reader = _LineReader(text)

    if reader.next() != CHECKPOINT_MAGIC:
        raise BadMagicError(f"bad magic: not a {CHECKPOINT_MAGIC} file")
    version_line = reader.next()
    if not version_line.startswith("format_version "):
        raise ShapeError("missing format_version header")
    version = int(version_line.split()[1])
    if version != CHECKPOINT_VERSION:
        raise UnsupportedVersionError(f"unsupported format_version {version}")

    input_dim = _header_int(reader, "input_dim")
    n_classes = _header_int(reader, "classes")
    n_blocks = _header_int(reader, "blocks")
    widths_line = reader.next().split()
    if widths_line[0] != "block_widths" or len(widths_line) != n_blocks + 1:
        raise ShapeError("block_widths header inconsistent with block count")
    widths = [int(w) for w in widths_line[1:]]
    head_hidden = _header_int(reader, "head_hidden")

    expected: list[tuple[str, tuple[int, ...]]] = []
    in_dim = input_dim
    for i, w in enumerate(widths, start=1):
        expected.append((f"block{i}.weights", (w, in_dim)))
        expected.append((f"block{i}.bias", (w,)))
        in_dim = w
    for i, w in enumerate(widths, start=1):
        expected.append((f"head{i}.hidden.weights", (head_hidden, w)))
        expected.append((f"head{i}.hidden.bias", (head_hidden,)))
        expected.append((f"head{i}.out.weights", (n_classes, head_hidden)))
        expected.append((f"head{i}.out.bias", (n_classes,)))

    tensors: dict[str, np.ndarray] = {}
    for name, shape in expected:
        decl = reader.next().split()
        if decl[0] != "tensor" or decl[1] != name:
            raise ShapeError(f"expected tensor {name!r}, found {' '.join(decl[:2])!r}")
        declared = tuple(int(d) for d in decl[2:])
        if declared != shape:
            raise ShapeError(f"tensor {name!r} declares shape {declared}, expected {shape}")
        count = int(np.prod(shape))
        values: list[float] = []
        while len(values) < count:
            for token in reader.next().split():
                try:
                    values.append(float.fromhex(token))
                except ValueError as exc:
                    raise ShapeError(f"bad value in tensor {name!r}: {token!r}") from exc
        if len(values) != count:
            raise ShapeError(f"tensor {name!r} carries more values than its shape allows")
        arr = np.array(values, dtype=np.float64).reshape(shape)
        if not np.all(np.isfinite(arr)):
            raise NumericError(f"tensor {name!r} contains non-finite values")
        tensors[name] = arr

    if reader.next() != "end":
        raise ShapeError("missing 'end' sentinel after tensors")

    blocks = [
        DenseLayer(tensors[f"block{i}.weights"], tensors[f"block{i}.bias"], "relu")
        for i in range(1, n_blocks + 1)
    ]
    heads = [
        [
            DenseLayer(tensors[f"head{i}.hidden.weights"], tensors[f"head{i}.hidden.bias"], "relu"),
            DenseLayer(tensors[f"head{i}.out.weights"], tensors[f"head{i}.out.bias"], "identity"),
        ]
        for i in range(1, n_blocks + 1)
    ]
    return MultiHeadNet(input_dim, n_classes, blocks, heads)
