"""Versioned binary checkpoints for networks and other named arrays.

Format: a .npz archive holding a JSON metadata entry (format version plus
arbitrary structure such as layer specs) and the parameter arrays in
row-major order. Round trips are bit-identical for float64 arrays.
"""

from __future__ import annotations

import json

import numpy as np

from .layers import Network

FORMAT_VERSION = 1

__all__ = ["save_arrays", "load_arrays", "save_network", "load_network", "FORMAT_VERSION"]


def save_arrays(path, meta: dict, arrays: dict[str, np.ndarray]) -> None:
    header = {"format_version": FORMAT_VERSION, "meta": meta}
    payload = {f"arr_{name}": np.ascontiguousarray(a) for name, a in arrays.items()}
    payload["header"] = np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8)
    np.savez(path, **payload)


def load_arrays(path) -> tuple[dict, dict[str, np.ndarray]]:
    with np.load(path) as data:
        header = json.loads(bytes(data["header"]).decode())
        if header.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint format: {header.get('format_version')}")
        arrays = {k[4:]: data[k] for k in data.files if k.startswith("arr_")}
    return header["meta"], arrays


def save_network(path, net: Network) -> None:
    arrays = {f"p{i}": p for i, p in enumerate(net.parameters())}
    save_arrays(path, {"kind": "network", "layers": net.spec()}, arrays)


def load_network(path) -> Network:
    meta, arrays = load_arrays(path)
    if meta.get("kind") != "network":
        raise ValueError("checkpoint does not hold a network")
    net = Network.from_spec(meta["layers"])
    values = [arrays[f"p{i}"] for i in range(len(net.parameters()))]
    net.set_parameters(values)
    return net
