"""Python access to the regkit library. Trees, rules and results travel as plain dicts and lists."""

import json

from . import _core

RegkitError = _core.RegkitError


def _dump(x):
    return "" if x is None else json.dumps(x)


def generate_trees(deg_cap="2", edge_cap=4, rule=None):
    return json.loads(_core.generate_trees(_dump(rule), str(deg_cap), int(edge_cap)))


def coproduct(tree, kind="full", rule=None, gamma0="33/10"):
    """tree: a tree dict or a toy name such as "I(Xi)^2"."""
    return json.loads(_core.coproduct(kind, json.dumps(tree), _dump(rule), str(gamma0)))


def hist(seed, rule=None):
    return json.loads(_core.hist(json.dumps(seed), _dump(rule)))


def age(tree, rule=None):
    return _core.age(json.dumps(tree), _dump(rule))


def bphz(historic, values=None, config=None):
    """values: [{"tree": ..., "value": ...}] for fixed expectations; None samples them by Monte Carlo."""
    return json.loads(_core.bphz(json.dumps(historic), _dump(values), json.dumps(config or {})))


def kernel_norm(descriptor, resolution=0):
    return json.loads(_core.kernel_norm(json.dumps(descriptor), int(resolution)))


def heat_eval(field, z, zbar=(0.0, 0.0), N=2):
    return json.loads(_core.heat_eval(json.dumps(field), list(z), list(zbar), int(N)))


def verify(config=None, only=()):
    return json.loads(_core.verify(json.dumps(config or {}), list(only)))


def tables(directory, config=None):
    return json.loads(_core.tables(json.dumps(config or {}), str(directory)))
