"""The VGG-lite classifier: conv/BN/ReLU/pool blocks and a two-layer head.

Architecture: n_blocks repetitions of (3x3 conv, stride 1, pad 1 -> batch
norm -> ReLU -> 2x2 max pool) with channel widths drawn from (16, 32, 64,
64), then flatten -> fully-connected 128 -> ReLU -> fully-connected k. A
224x224 input pooled four times reaches 14x14x64, a flatten width of 12544.

Weights use He-uniform fan-in initialization, biases start at zero, batch
norm at gamma 1 / beta 0 with running mean 0 / var 1. Everything is
deterministic in the seed.

Checkpoint format (little-endian): magic "VGL1" | u16 version=1 | u32 k |
u32 n_blocks | n_blocks x u32 widths | u32 in_channels | u32 input_h |
u32 input_w | u32 tensor count | tensors, each as u16 name length, UTF-8
name, u32 rank, rank x u32 dims, then f64 data. Tensor order is fixed, so
identical nets serialize to identical bytes.
"""

from __future__ import annotations

import struct

import numpy as np

from .layers import BatchNorm2d, Conv3x3, Flatten, Linear, MaxPool2x2, ReLU

VGL_MAGIC = b"VGL1"
VGL_VERSION = 1
BLOCK_WIDTHS = (16, 32, 64, 64)
HEAD_WIDTH = 128


class VggLiteNet:
    """Compact convolutional classifier with a replaceable final layer."""

    def __init__(
        self,
        k: int,
        seed: int,
        input_hw: tuple[int, int] = (224, 224),
        n_blocks: int = 4,
        in_channels: int = 3,
    ):
        if k < 2:
            raise ValueError(f"need at least 2 output classes, got k={k}")
        if not (1 <= n_blocks <= len(BLOCK_WIDTHS)):
            raise ValueError(f"n_blocks must be in 1..{len(BLOCK_WIDTHS)}")
        h, w = input_hw
        divisor = 2**n_blocks
        if h % divisor or w % divisor:
            raise ValueError(
                f"input {h}x{w} must be divisible by {divisor} for {n_blocks} pools"
            )
        self.k = k
        self.n_blocks = n_blocks
        self.widths = BLOCK_WIDTHS[:n_blocks]
        self.input_hw = (h, w)
        self.in_channels = in_channels
        self.mode = "train"

        rng = np.random.default_rng(seed)
        self.blocks = []
        ch = in_channels
        for width in self.widths:
            self.blocks.append(
                {
                    "conv": Conv3x3(ch, width, rng),
                    "bn": BatchNorm2d(width),
                    "relu": ReLU(),
                    "pool": MaxPool2x2(),
                }
            )
            ch = width
        flat = (h // divisor) * (w // divisor) * ch
        self.flatten = Flatten()
        self.fc1 = Linear(flat, HEAD_WIDTH, rng)
        self.head_relu = ReLU()
        self.fc2 = Linear(HEAD_WIDTH, k, rng)

    # -- parameter bookkeeping -------------------------------------------

    def params(self) -> dict[str, np.ndarray]:
        """Live references to every trainable tensor, in fixed order."""
        out: dict[str, np.ndarray] = {}
        for i, blk in enumerate(self.blocks):
            out[f"block{i}.conv.w"] = blk["conv"].w
            out[f"block{i}.conv.b"] = blk["conv"].b
            out[f"block{i}.bn.gamma"] = blk["bn"].gamma
            out[f"block{i}.bn.beta"] = blk["bn"].beta
        out["head.fc1.w"] = self.fc1.w
        out["head.fc1.b"] = self.fc1.b
        out["head.fc2.w"] = self.fc2.w
        out["head.fc2.b"] = self.fc2.b
        return out

    def set_params(self, values: dict[str, np.ndarray]) -> None:
        current = self.params()
        if set(values) != set(current):
            raise ValueError("parameter name mismatch")
        for i, blk in enumerate(self.blocks):
            blk["conv"].w = values[f"block{i}.conv.w"]
            blk["conv"].b = values[f"block{i}.conv.b"]
            blk["bn"].gamma = values[f"block{i}.bn.gamma"]
            blk["bn"].beta = values[f"block{i}.bn.beta"]
        self.fc1.w = values["head.fc1.w"]
        self.fc1.b = values["head.fc1.b"]
        self.fc2.w = values["head.fc2.w"]
        self.fc2.b = values["head.fc2.b"]

    def state(self) -> dict[str, np.ndarray]:
        """Parameters plus batch-norm running statistics (live references)."""
        out = self.params()
        for i, blk in enumerate(self.blocks):
            out[f"block{i}.bn.running_mean"] = blk["bn"].running_mean
            out[f"block{i}.bn.running_var"] = blk["bn"].running_var
        return out

    def snapshot(self) -> dict[str, np.ndarray]:
        return {name: arr.copy() for name, arr in self.state().items()}

    def restore(self, snap: dict[str, np.ndarray]) -> None:
        self.set_params({n: snap[n].copy() for n in self.params()})
        for i, blk in enumerate(self.blocks):
            blk["bn"].running_mean = snap[f"block{i}.bn.running_mean"].copy()
            blk["bn"].running_var = snap[f"block{i}.bn.running_var"].copy()

    # -- passes ------------------------------------------------------------

    def forward(self, batch: np.ndarray) -> np.ndarray:
        x = np.asarray(batch, dtype=np.float64)
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise ValueError(
                f"expected batch of shape B x {self.in_channels} x H x W, got {x.shape}"
            )
        if x.shape[2:] != self.input_hw:
            raise ValueError(
                f"expected spatial size {self.input_hw}, got {x.shape[2:]}"
            )
        train = self.mode == "train"
        if train and x.shape[0] < 2:
            raise ValueError("train-mode forward needs a batch of at least 2")
        for blk in self.blocks:
            x = blk["conv"].forward(x)
            x = blk["bn"].forward(x, train)
            x = blk["relu"].forward(x)
            x = blk["pool"].forward(x)
        x = self.flatten.forward(x)
        x = self.fc1.forward(x)
        x = self.head_relu.forward(x)
        return self.fc2.forward(x)

    def backprop(self, dlogits: np.ndarray) -> dict[str, np.ndarray]:
        """Reverse pass from the logits gradient; uses the last forward's caches."""
        d = self.fc2.backward(dlogits)
        d = self.head_relu.backward(d)
        d = self.fc1.backward(d)
        d = self.flatten.backward(d)
        for blk in reversed(self.blocks):
            d = blk["pool"].backward(d)
            d = blk["relu"].backward(d)
            d = blk["bn"].backward(d)
            d = blk["conv"].backward(d)
        grads: dict[str, np.ndarray] = {}
        for i, blk in enumerate(self.blocks):
            grads[f"block{i}.conv.w"] = blk["conv"].dw
            grads[f"block{i}.conv.b"] = blk["conv"].db
            grads[f"block{i}.bn.gamma"] = blk["bn"].dgamma
            grads[f"block{i}.bn.beta"] = blk["bn"].dbeta
        grads["head.fc1.w"] = self.fc1.dw
        grads["head.fc1.b"] = self.fc1.db
        grads["head.fc2.w"] = self.fc2.dw
        grads["head.fc2.b"] = self.fc2.db
        return grads


def init_net(
    k: int,
    seed: int,
    input_hw: tuple[int, int] = (224, 224),
    n_blocks: int = 4,
    in_channels: int = 3,
) -> VggLiteNet:
    """Fresh deterministic network; see VggLiteNet for the layout."""
    return VggLiteNet(k, seed, input_hw=input_hw, n_blocks=n_blocks, in_channels=in_channels)


def replace_head(net: VggLiteNet, k: int, seed: int) -> VggLiteNet:
    """Copy the network, re-initializing only the final fully-connected layer.

    The new head is drawn fresh from the seed even when k is unchanged; all
    other tensors (batch-norm running statistics included) are copied
    bit-exactly.
    """
    if k < 2:
        raise ValueError(f"need at least 2 output classes, got k={k}")
    out = VggLiteNet(
        k,
        seed=0,
        input_hw=net.input_hw,
        n_blocks=net.n_blocks,
        in_channels=net.in_channels,
    )
    donor = net.snapshot()
    rng = np.random.default_rng(seed)
    head = Linear(HEAD_WIDTH, k, rng)
    donor["head.fc2.w"] = head.w
    donor["head.fc2.b"] = head.b
    out.restore(donor)
    out.mode = net.mode
    return out


def forward(net: VggLiteNet, batch: np.ndarray) -> np.ndarray:
    return net.forward(batch)


def backward(net: VggLiteNet, batch: np.ndarray, labels: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of the mean cross-entropy at the current parameters."""
    from .training import cross_entropy

    logits = net.forward(batch)
    _, dlogits = cross_entropy(logits, labels)
    return net.backprop(dlogits)


def save_checkpoint(net: VggLiteNet, path) -> None:
    chunks = [
        struct.pack(
            "<4sHII",
            VGL_MAGIC,
            VGL_VERSION,
            net.k,
            net.n_blocks,
        )
    ]
    chunks.append(struct.pack(f"<{net.n_blocks}I", *net.widths))
    chunks.append(
        struct.pack("<III", net.in_channels, net.input_hw[0], net.input_hw[1])
    )
    tensors = net.state()
    chunks.append(struct.pack("<I", len(tensors)))
    for name, arr in tensors.items():
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)) + encoded)
        chunks.append(struct.pack("<I", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


def load_checkpoint(path) -> VggLiteNet:
    with open(path, "rb") as fh:
        data = fh.read()
    offset = 0

    def take(fmt: str):
        nonlocal offset
        size = struct.calcsize(fmt)
        if offset + size > len(data):
            raise ValueError(f"{path}: truncated checkpoint")
        values = struct.unpack_from(fmt, data, offset)
        offset += size
        return values

    magic, version, k, n_blocks = take("<4sHII")
    if magic != VGL_MAGIC:
        raise ValueError(f"{path}: bad magic, not a VGL1 checkpoint")
    if version != VGL_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    widths = take(f"<{n_blocks}I")
    if widths != BLOCK_WIDTHS[:n_blocks]:
        raise ValueError(f"{path}: unexpected block widths {widths}")
    in_channels, input_h, input_w = take("<III")
    (n_tensors,) = take("<I")
    net = VggLiteNet(
        k, seed=0, input_hw=(input_h, input_w), n_blocks=n_blocks, in_channels=in_channels
    )
    state = {}
    for _ in range(n_tensors):
        (name_len,) = take("<H")
        name = data[offset : offset + name_len].decode("utf-8")
        offset += name_len
        (rank,) = take("<I")
        dims = take(f"<{rank}I")
        count = int(np.prod(dims)) if rank else 1
        raw = data[offset : offset + count * 8]
        if len(raw) != count * 8:
            raise ValueError(f"{path}: truncated tensor {name!r}")
        offset += count * 8
        state[name] = np.frombuffer(raw, dtype="<f8").reshape(dims).copy()
    expected = set(net.state())
    if set(state) != expected:
        raise ValueError(f"{path}: tensor names do not match the architecture")
    net.restore(state)
    net.mode = "eval"
    return net
