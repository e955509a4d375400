"""Bundled orders and a small JSON schema for modules over them."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

from .elliptic import MWPresentation
from .errors import ConfigError
from .lattice import IntMatrix
from .module import OModule
from .order import Normalization, Order, check_order, contracted_ideal, order_from_json, primes_above


@lru_cache(maxsize=None)
def _raw_orders() -> dict:
    text = resources.files("redsub").joinpath("data/orders.json").read_text()
    return {o["name"]: o for o in json.loads(text)["orders"]}


def order_names() -> list[str]:
    return list(_raw_orders())


@lru_cache(maxsize=None)
def load_order(name: str) -> tuple[Order, Normalization]:
    try:
        data = _raw_orders()[name]
    except KeyError:
        raise ConfigError(f"unknown order {name!r}; known: {', '.join(order_names())}") from None
    order, nrm = order_from_json(data)
    check_order(order, nrm)
    return order, nrm


@lru_cache(maxsize=None)
def _raw_curves() -> dict:
    text = resources.files("redsub").joinpath("data/curves.json").read_text()
    return {c["name"]: c for c in json.loads(text)["curves"]}


def curve_names() -> list[str]:
    return list(_raw_curves())


@lru_cache(maxsize=None)
def load_curve(name: str) -> MWPresentation:
    try:
        data = _raw_curves()[name]
    except KeyError:
        raise ConfigError(f"unknown curve {name!r}; known: {', '.join(curve_names())}") from None
    return MWPresentation.from_json(data)


def resolve_order(spec) -> tuple[Order, Normalization]:
    """An order given by fixture name or as an inline JSON object."""
    if isinstance(spec, str):
        return load_order(spec)
    order, nrm = order_from_json(spec)
    check_order(order, nrm)
    return order, nrm


def module_from_json(data: dict, order: Order | None = None, nrm: Normalization | None = None) -> OModule:
    """Build a module from one of these forms (all carry "order")::

        {"free_rank": f, "torsion": [...], "action": [[...], ...]}
        {"presentation": {"rank": k, "relations": [[...], ...]}}
        {"ideal": [[...], ...]}                     an ideal of O, by generators
        {"ideal_quotient": {"p": p, "prime": i, "n": n}}   O / p_{i,n}
        {"sum": [module, module, ...]}              direct sum
    """
    if order is None:
        order, nrm = resolve_order(data["order"])
    name = data.get("name", "")
    if "sum" in data:
        parts = [module_from_json({**m, "order": data["order"]}, order, nrm) for m in data["sum"]]
        return direct_sum(parts, name)
    if "presentation" in data:
        pres = data["presentation"]
        M = OModule.from_presentation(order, pres["rank"], pres.get("relations", []), nrm, name)
    elif "ideal" in data:
        M = OModule.from_ideal(order.ideal(data["ideal"]), nrm, name)
    elif "ideal_quotient" in data:
        q = data["ideal_quotient"]
        prime = primes_above(nrm, q["p"])[q["prime"]]
        I = contracted_ideal(order, nrm, prime, q["n"])
        M = OModule.from_presentation(order, 1, I.generators, nrm, name)
    elif "action" in data:
        M = OModule.from_json(data, order, nrm)
    else:
        raise ConfigError(f"module {name!r} has no recognised form")
    return M.validate()


def direct_sum(parts: list[OModule], name: str = "") -> OModule:
    """Direct sum, free coordinates of all summands first."""
    if not parts:
        raise ConfigError("empty direct sum")
    order = parts[0].order
    free = [(k, i) for k, P in enumerate(parts) for i in range(P.free_rank)]
    tors = [(k, P.free_rank + l) for k, P in enumerate(parts) for l in range(len(P.torsion))]
    layout = free + tors
    n = len(layout)
    action = []
    for j in range(order.rank):
        rows = []
        for k, i in layout:
            A = parts[k].action[j]
            rows.append([A[i, b] if kk == k else 0 for kk, b in layout])
        action.append(IntMatrix.from_rows(rows, n))
    torsion = tuple(parts[k].torsion[i - parts[k].free_rank] for k, i in tors)
    return OModule(order, len(free), torsion, tuple(action), parts[0].normalization, name)
