"""
Approximate multipliers assigned at fine granularity over a small
8-bit quantized convolutional network, with a count-based energy
estimate.

Weights are operand A and activations operand B; both are unsigned
8-bit values zero-extended into 10-bit signed words.
"""
import base64
import json
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Dict, NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd

from .approx_fixed import Accurate, AxConfig, multiply_array, parse_config
from .errors import AssignmentError, ConfigError, EnergyTableError
from .utils import generator


logger = logging.getLogger(__name__)

NET_WIDTH = 10

GRANULARITIES = ("layer", "filter", "channel", "row", "column")

DATA_DIR = Path(__file__).parent / "data"
ENERGY_TABLE = DATA_DIR / "energy_table.csv"


@dataclass(frozen=True, eq=False)
class QuantConvLayer:
    """Quantized 2D convolution with affine requantization.

    Real values are scale * (q - zero). The output is clipped to
    [output_zero, 255] when `relu` is set, [0, 255] otherwise.

    Attributes:
        weights (numpy.ndarray): uint8 weights, N x M x r x r.
        bias (numpy.ndarray): int32 bias per filter, in accumulator units.
    """
    weights: np.ndarray
    input_scale: float = 1.0
    input_zero: int = 0
    weight_scale: float = 1.0
    weight_zero: int = 0
    output_scale: float = 1.0
    output_zero: int = 0
    bias: Optional[np.ndarray] = None
    stride: int = 1
    padding: int = 0
    relu: bool = True
    name: str = ""

    def __post_init__(self):
        weights = np.asarray(self.weights)
        if weights.ndim != 4 or weights.shape[2] != weights.shape[3]:
            raise ValueError(f"weights must be N x M x r x r, got {weights.shape}")
        if weights.size and (weights.min() < 0 or weights.max() > 255):
            raise ValueError("weights must be 8-bit unsigned")
        object.__setattr__(self, "weights", weights.astype(np.int64))
        bias = np.zeros(weights.shape[0], dtype=np.int64) if self.bias is None else self.bias
        bias = np.asarray(bias, dtype=np.int64)
        if bias.shape != (weights.shape[0],):
            raise ValueError(f"bias needs {weights.shape[0]} entries, got {bias.shape}")
        object.__setattr__(self, "bias", bias)
        for name in ("input_scale", "weight_scale", "output_scale"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be positive and finite, got {value!r}")
        if self.stride < 1 or self.padding < 0:
            raise ValueError("stride must be >= 1 and padding >= 0")

    @property
    def filters(self):
        return self.weights.shape[0]

    @property
    def channels(self):
        return self.weights.shape[1]

    @property
    def size(self):
        return self.weights.shape[2]

    def output_shape(self, input_shape):
        channels, height, width = input_shape
        if channels != self.channels:
            raise ValueError(f"layer {self.name!r} expects {self.channels} channels, got {channels}")
        rows = (height + 2 * self.padding - self.size) // self.stride + 1
        cols = (width + 2 * self.padding - self.size) // self.stride + 1
        if rows < 1 or cols < 1:
            raise ValueError(f"input {input_shape} too small for layer {self.name!r}")
        return self.filters, rows, cols


@dataclass(frozen=True, eq=False)
class QuantNetwork:
    name: str
    input_shape: Tuple[int, int, int]
    layers: Tuple[QuantConvLayer, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(int(v) for v in self.input_shape))
        object.__setattr__(self, "layers", tuple(self.layers))
        self.shapes()

    def shapes(self):
        """Input shape of every layer followed by the output shape."""
        shapes = [self.input_shape]
        for layer in self.layers:
            shapes.append(layer.output_shape(shapes[-1]))
        return shapes


@dataclass(frozen=True)
class LayerAssignment:
    """Configurations of one layer.

    Attributes:
        configs (tuple): AxConfig list; its meaning follows the scheme's
            granularity.
        groups (tuple, optional): Filter group sizes for filter granularity;
            one filter per config when omitted.
    """
    configs: Tuple[AxConfig, ...]
    groups: Optional[Tuple[int, ...]] = None


@dataclass(frozen=True)
class AssignmentScheme:
    """Maps every multiplication of a network to one configuration.

    layer: one config per layer. filter: one config per filter group.
    channel, row, column: kernel flavors assigning the configs cyclically
    over the input channels, rows or columns of each kernel.
    """
    granularity: str
    layers: Tuple[LayerAssignment, ...]
    name: str = ""

    def __post_init__(self):
        if self.granularity not in GRANULARITIES:
            raise ConfigError(f"unknown granularity {self.granularity!r}")
        object.__setattr__(self, "layers", tuple(self.layers))

    @classmethod
    def uniform(cls, cfg, layer_count, name=None):
        cfg = parse_config(cfg) if isinstance(cfg, str) else cfg
        return cls("layer", tuple(LayerAssignment((cfg,)) for _ in range(layer_count)),
                   name or str(cfg))

    @classmethod
    def from_dict(cls, data):
        try:
            layers = tuple(
                LayerAssignment(tuple(parse_config(c) for c in entry["configs"]),
                                tuple(entry["groups"]) if entry.get("groups") else None)
                for entry in data["layers"])
            return cls(data["granularity"], layers, data.get("name", ""))
        except KeyError as err:
            raise ConfigError(f"scheme is missing {err}") from None

    def to_dict(self):
        return {
            "name": self.name,
            "granularity": self.granularity,
            "layers": [{"configs": [str(c) for c in entry.configs],
                        **({"groups": list(entry.groups)} if entry.groups else {})}
                       for entry in self.layers],
        }


class ResolvedAssignment(NamedTuple):
    """Per-layer read-only object arrays of shape N x M x r x r holding
    the configuration of every weight position."""
    layers: Tuple[np.ndarray, ...]

    def configs(self):
        seen = []
        for view in self.layers:
            for cfg in view.ravel().tolist():
                if cfg not in seen:
                    seen.append(cfg)
        return seen


def _resolve_layer(index, layer, entry, granularity):
    view = np.empty(layer.weights.shape, dtype=object)
    configs = entry.configs
    if not configs:
        raise AssignmentError(f"layer {index} has no configuration")
    if granularity == "layer":
        if len(configs) != 1:
            raise AssignmentError(f"layer {index}: layer granularity takes one configuration")
        view[...] = configs[0]
    elif granularity == "filter":
        groups = entry.groups or (1,) * len(configs)
        if len(groups) != len(configs) or sum(groups) != layer.filters:
            raise AssignmentError(
                f"layer {index}: filter groups {groups} do not cover {layer.filters} filters")
        start = 0
        for cfg, size in zip(configs, groups):
            view[start:start + size] = cfg
            start += size
    else:
        axis = {"channel": 1, "row": 2, "column": 3}[granularity]
        for position in range(layer.weights.shape[axis]):
            index_slice = [slice(None)] * 4
            index_slice[axis] = position
            view[tuple(index_slice)] = configs[position % len(configs)]
    view.setflags(write=False)
    return view


def assign(network, scheme):
    """Resolve a scheme to one configuration per multiplication.

    Raises:
        AssignmentError: A layer or filter is not covered.
    """
    views = []
    for index, layer in enumerate(network.layers):
        try:
            entry = scheme.layers[index]
        except IndexError:
            raise AssignmentError(f"scheme does not cover layer {index}") from None
        views.append(_resolve_layer(index, layer, entry, scheme.granularity))
    return ResolvedAssignment(tuple(views))


@lru_cache(maxsize=None)
def product_table(cfg, width=NET_WIDTH):
    """table[w, x] = product of weight w and activation x under `cfg`."""
    values = np.arange(256, dtype=np.int64)
    table = np.asarray(multiply_array(cfg, values[:, None], values[None, :], width),
                       dtype=np.int64)
    table.setflags(write=False)
    return table


def _patches(x, layer, zero):
    """Input windows per kernel offset, shape (r, r, M, rows, cols)."""
    padded = np.pad(x, ((0, 0), (layer.padding,) * 2, (layer.padding,) * 2),
                    constant_values=zero)
    _, rows, cols = layer.output_shape(x.shape)
    span_r = (rows - 1) * layer.stride + 1
    span_c = (cols - 1) * layer.stride + 1
    return np.stack([
        np.stack([padded[:, u:u + span_r:layer.stride, v:v + span_c:layer.stride]
                  for v in range(layer.size)])
        for u in range(layer.size)])


def conv_forward_quant(layer, x, view=None, width=NET_WIDTH):
    """Quantized convolution with every product dispatched per `view`.

    Args:
        layer (QuantConvLayer): The layer.
        x (numpy.ndarray): uint8 activations, M x H x W.
        view (numpy.ndarray, optional): Configurations, N x M x r x r.
            All Accurate when omitted.

    Returns:
        numpy.ndarray: uint8 activations, N x rows x cols.
    """
    x = np.asarray(x, dtype=np.int64)
    if x.ndim != 3:
        raise ValueError(f"activations must be M x H x W, got {x.shape}")
    if view is None:
        view = np.full(layer.weights.shape, Accurate(), dtype=object)
    if view.shape != layer.weights.shape:
        raise ValueError(f"view shape {view.shape} != weight shape {layer.weights.shape}")
    patches = _patches(x, layer, layer.input_zero)
    filters, rows, cols = layer.output_shape(x.shape)

    raw = np.zeros((filters, rows, cols), dtype=np.int64)
    for cfg in set(view.ravel().tolist()):
        table = product_table(cfg, width)
        selected = view == cfg
        for u in range(layer.size):
            for v in range(layer.size):
                mask = selected[:, :, u, v]
                if not mask.any():
                    continue
                products = table[layer.weights[:, :, u, v][:, :, None, None],
                                 patches[u, v][None, :, :, :]]
                raw += np.where(mask[:, :, None, None], products, 0).sum(axis=1)

    count = layer.channels * layer.size * layer.size
    input_sum = patches.sum(axis=(0, 1, 2))
    weight_sum = layer.weights.sum(axis=(1, 2, 3))
    acc = (raw
           - layer.weight_zero * input_sum[None]
           - layer.input_zero * weight_sum[:, None, None]
           + count * layer.input_zero * layer.weight_zero
           + layer.bias[:, None, None])
    multiplier = layer.input_scale * layer.weight_scale / layer.output_scale
    out = np.rint(acc * multiplier) + layer.output_zero
    low = layer.output_zero if layer.relu else 0
    return np.clip(out, low, 255).astype(np.uint8)


def forward(network, x, resolved=None, width=NET_WIDTH):
    """Run every layer; returns the final activations."""
    activations = np.asarray(x)
    for index, layer in enumerate(network.layers):
        view = None if resolved is None else resolved.layers[index]
        activations = conv_forward_quant(layer, activations, view, width)
    return activations


# Energy


@dataclass(frozen=True)
class EnergyTable:
    """Per-multiplication cost keyed by configuration text.

    Attributes:
        costs (dict): Config text -> cost units.
        sources (dict): Config text -> provenance.
    """
    costs: Dict[str, float]
    sources: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if str(Accurate()) not in self.costs:
            raise EnergyTableError("energy table lacks the accurate multiplier")
        for name, cost in self.costs.items():
            if not cost > 0:
                raise ValueError(f"cost of {name} must be positive, got {cost!r}")

    def cost(self, cfg):
        key = str(parse_config(cfg) if isinstance(cfg, str) else cfg)
        try:
            return self.costs[key]
        except KeyError:
            raise EnergyTableError(f"no energy entry for {key}") from None


def load_energy_table(path=None):
    """Read a `config,cost_units,source` CSV; `#` starts a comment."""
    frame = pd.read_csv(path or ENERGY_TABLE, comment="#", skipinitialspace=True)
    missing = {"config", "cost_units"} - set(frame.columns)
    if missing:
        raise EnergyTableError(f"energy table lacks columns {sorted(missing)}")
    configs = [str(parse_config(c)) for c in frame["config"]]
    sources = frame["source"].fillna("").astype(str) if "source" in frame else [""] * len(configs)
    return EnergyTable(dict(zip(configs, frame["cost_units"].astype(float))),
                       dict(zip(configs, sources)))


def multiplication_counts(network, resolved):
    """Per layer, a dict of configuration -> multiplications."""
    counts = []
    shapes = network.shapes()
    for index, view in enumerate(resolved.layers):
        _, rows, cols = shapes[index + 1]
        layer_counts = {}
        for cfg in view.ravel().tolist():
            layer_counts[cfg] = layer_counts.get(cfg, 0) + rows * cols
        counts.append(layer_counts)
    return counts


class EnergyEstimate(NamedTuple):
    total: float
    per_layer: Tuple[float, ...]


def estimate_energy(network, scheme, table):
    """Sum of multiplications times per-multiplication cost.

    Raises:
        EnergyTableError: A used configuration has no table entry.
    """
    resolved = assign(network, scheme)
    per_layer = tuple(
        sum(count * table.cost(cfg) for cfg, count in layer_counts.items())
        for layer_counts in multiplication_counts(network, resolved))
    return EnergyEstimate(sum(per_layer), per_layer)


def accuracy_proxy(reference, activations):
    """1 - MAE / 255 of final activations against the reference run."""
    reference = np.asarray(reference, dtype=np.float64)
    activations = np.asarray(activations, dtype=np.float64)
    if reference.shape != activations.shape:
        raise ValueError(f"activation shapes differ: {reference.shape} != {activations.shape}")
    return 1.0 - float(np.mean(np.abs(reference - activations))) / 255.0


# Network files


def _encode_weights(weights):
    return base64.b64encode(np.asarray(weights, dtype=np.uint8).tobytes()).decode("ascii")


def network_to_dict(network):
    return {
        "format": "axnet",
        "version": 1,
        "name": network.name,
        "input_shape": list(network.input_shape),
        "layers": [{
            "name": layer.name,
            "shape": list(layer.weights.shape),
            "weights": _encode_weights(layer.weights),
            "bias": layer.bias.tolist(),
            "input_scale": layer.input_scale,
            "input_zero": layer.input_zero,
            "weight_scale": layer.weight_scale,
            "weight_zero": layer.weight_zero,
            "output_scale": layer.output_scale,
            "output_zero": layer.output_zero,
            "stride": layer.stride,
            "padding": layer.padding,
            "relu": layer.relu,
        } for layer in network.layers],
    }


def network_from_dict(data):
    if data.get("format") != "axnet":
        raise ValueError("not an axnet network description")
    layers = []
    for entry in data.get("layers", []):
        shape = tuple(entry["shape"])
        weights = np.frombuffer(base64.b64decode(entry["weights"]), dtype=np.uint8)
        if weights.size != int(np.prod(shape)):
            raise ValueError(f"layer {entry.get('name')!r}: weights do not match shape {shape}")
        params = {k: entry[k] for k in ("input_scale", "input_zero", "weight_scale", "weight_zero",
                                        "output_scale", "output_zero", "stride", "padding", "relu")
                  if k in entry}
        layers.append(QuantConvLayer(weights.reshape(shape), bias=entry.get("bias"),
                                     name=entry.get("name", ""), **params))
        logger.debug("layer %s: weights %s", entry.get("name", ""), shape)
    return QuantNetwork(data.get("name", ""), tuple(data["input_shape"]), tuple(layers))


def save_network(network, path):
    Path(path).write_text(json.dumps(network_to_dict(network), indent=2) + "\n")


def load_network(path):
    with open(path) as handle:
        return network_from_dict(json.load(handle))


def toy_network(seed=1):
    """Two 3x3 layers, 1 -> 4 -> 2 channels, over 8x8 inputs."""
    rng = generator(seed)
    first = QuantConvLayer(rng.integers(0, 256, size=(4, 1, 3, 3)), input_scale=0.02,
                           weight_scale=0.01, weight_zero=128, output_scale=0.05,
                           padding=1, name="conv1")
    second = QuantConvLayer(rng.integers(0, 256, size=(2, 4, 3, 3)), input_scale=0.05,
                            weight_scale=0.01, weight_zero=128, output_scale=0.05,
                            padding=1, name="conv2")
    return QuantNetwork("toy", (1, 8, 8), (first, second))


def toy_inputs(network, count=4, seed=1):
    """Seeded uint8 activations shaped for `network`."""
    return generator(seed).integers(0, 256, size=(count,) + network.input_shape).astype(np.uint8)


def evaluate_scheme(network, scheme, inputs, table):
    """Accuracy proxy against the all-accurate run, and energy units."""
    resolved = assign(network, scheme)
    proxies = []
    for x in inputs:
        reference = forward(network, x)
        proxies.append(accuracy_proxy(reference, forward(network, x, resolved)))
    energy = estimate_energy(network, scheme, table)
    logger.info("scheme %s: accuracy %.4f, energy %.0f", scheme.name, np.mean(proxies),
                energy.total)
    return float(np.mean(proxies)), energy.total


__all__ = [
    "NET_WIDTH", "GRANULARITIES", "QuantConvLayer", "QuantNetwork", "LayerAssignment",
    "AssignmentScheme", "ResolvedAssignment", "assign", "product_table",
    "conv_forward_quant", "forward", "EnergyTable", "load_energy_table",
    "multiplication_counts", "EnergyEstimate", "estimate_energy", "accuracy_proxy",
    "network_to_dict", "network_from_dict", "save_network", "load_network", "toy_network",
    "toy_inputs", "evaluate_scheme",
]
