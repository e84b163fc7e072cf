"""Hierarchical models as directed acyclic graphs with targeted log densities.

A model is declared as a JSON-style dict::

    {"nodes": [
        {"name": "a",  "kind": "parameter", "family": "normal",
         "params": {"mean": 0.0, "sd": 10.0}},
        {"name": "m1", "kind": "deterministic", "op": "affine",
         "inputs": ["x0"], "params": {"coefficients": ["b"], "offset": "a"}},
        {"name": "y0", "kind": "data", "family": "normal",
         "params": {"mean": "m1", "sd": 0.5}, "value": 1.2},
    ]}

Node kinds are ``parameter`` (sampled, contributes theta slots), ``data``
(fixed observations) and ``deterministic`` (recomputed whenever an upstream
stochastic value changes).  Distribution families: ``normal(mean, sd)``,
``gamma(shape, rate)``, ``beta(a, b)``, ``binomial(size, prob)``,
``poisson(rate)`` and ``mvnormal(mean, cov)``.  Deterministic ops:
``affine(coefficients, offset)`` over listed inputs, elementwise ``exp`` and
``expit``, and ``expcov(sigma, range, distances)`` which builds the
exponential-distance covariance sigma^2 * exp(-d_ij / range).

Every distribution/op parameter is either a literal (number or nested list)
or a reference string naming another node (``"g"``) or one element of a
vector node (``"g[3]"``).  References define the graph's edges.

Vector parameter nodes flatten into consecutive theta slots named
``node[k]``, so samplers always operate on scalar slots.  Discrete families
(binomial, poisson) are restricted to data nodes; sampled parameters must be
continuous.
"""

from __future__ import annotations

import heapq
import json
import math
import re
from typing import Iterable

import numpy as np

from . import _kernels
from .errors import (
    ArityMismatchError,
    CycleError,
    InvalidParameterError,
    LengthMismatchError,
    UnknownReferenceError,
)

NEG_INF = float("-inf")
LOG_2PI = _kernels.LOG_2PI

PARAMETER = "parameter"
DATA = "data"
DETERMINISTIC = "deterministic"

_KINDS = (PARAMETER, DATA, DETERMINISTIC)

FAMILY_PARAMS = {
    "normal": ("mean", "sd"),
    "gamma": ("shape", "rate"),
    "beta": ("a", "b"),
    "binomial": ("size", "prob"),
    "poisson": ("rate",),
    "mvnormal": ("mean", "cov"),
}
DISCRETE_FAMILIES = ("binomial", "poisson")
OP_PARAMS = {
    "affine": ("coefficients", "offset"),
    "exp": (),
    "expit": (),
    "expcov": ("sigma", "range", "distances"),
}

_REF_RE = re.compile(r"^(.*?)\[(\d+)\]$")


class Node:
    """One vertex of the model graph."""

    __slots__ = (
        "name", "index", "kind", "family", "op", "raw_params", "raw_inputs",
        "raw_value", "value", "dim", "parents", "topo_pos", "_logpdf",
        "_recompute", "_stale", "_version", "_det_down",
    )

    def __init__(self, name, index, kind, family, op, raw_params, raw_inputs,
                 raw_value):
        self.name = name
        self.index = index
        self.kind = kind
        self.family = family
        self.op = op
        self.raw_params = raw_params
        self.raw_inputs = raw_inputs
        self.raw_value = raw_value
        self.value = None
        self.dim = 1
        self.parents = []
        self.topo_pos = -1
        self._logpdf = None
        self._recompute = None
        self._stale = False
        self._version = 0
        self._det_down = ()

    @property
    def is_stochastic(self):
        return self.kind != DETERMINISTIC

    def __repr__(self):
        return f"Node({self.name!r}, {self.kind})"


def _parse_ref(text):
    """Split a reference string into (node name, element index or None)."""
    m = _REF_RE.match(text)
    if m:
        return m.group(1), int(m.group(2))
    return text, None


class ModelGraph:
    """Validated DAG with density evaluation and dependency queries.

    Instances are mutable single-threaded state: samplers write parameter
    slots, deterministic nodes are refreshed lazily before any density read.
    ``eval_counts[i]`` tallies density evaluations of node ``i`` for the
    cost-model instrumentation.
    """

    def __init__(self, spec):
        if isinstance(spec, str):
            spec = json.loads(spec)
        self._spec = spec
        self.nodes: list[Node] = []
        self._by_name: dict[str, Node] = {}
        self._children: list[list[Node]] = []
        self._stale_list: list[Node] = []
        self._dependents_cache: dict[int, tuple[Node, ...]] = {}
        self.eval_counts: list[int] = []

        self._parse_nodes(spec)
        self._resolve_edges()
        self._toposort()
        self._initialize_values()
        self._build_slots()
        self.eval_counts = [0] * len(self.nodes)
        self._build_evaluators()
        self._build_det_downstream()
        self._initial_theta = self.get_theta()
        _kernels.warmup()

    # ------------------------------------------------------------------
    # construction
    # ------------------------------------------------------------------

    def _parse_nodes(self, spec):
        if not isinstance(spec, dict) or "nodes" not in spec:
            raise ArityMismatchError("model spec must be a dict with a 'nodes' list")
        for raw in spec["nodes"]:
            name = raw.get("name")
            if not isinstance(name, str) or not name:
                raise ArityMismatchError("every node needs a non-empty string name")
            if "[" in name or "]" in name:
                raise ArityMismatchError(f"node name {name!r} may not contain brackets")
            if name in self._by_name:
                raise ArityMismatchError(f"duplicate node name {name!r}")
            kind = raw.get("kind")
            if kind not in _KINDS:
                raise ArityMismatchError(f"node {name!r}: unknown kind {kind!r}")
            family = raw.get("family")
            op = raw.get("op")
            params = raw.get("params", {})
            inputs = raw.get("inputs", [])
            if kind == DETERMINISTIC:
                if op not in OP_PARAMS:
                    raise ArityMismatchError(f"node {name!r}: unknown op {op!r}")
                expected = set(OP_PARAMS[op])
                if set(params) != expected:
                    raise ArityMismatchError(
                        f"node {name!r}: op {op!r} takes params {sorted(expected)}, "
                        f"got {sorted(params)}")
            else:
                if family not in FAMILY_PARAMS:
                    raise ArityMismatchError(
                        f"node {name!r}: unknown family {family!r}")
                expected = set(FAMILY_PARAMS[family])
                if set(params) != expected:
                    raise ArityMismatchError(
                        f"node {name!r}: family {family!r} takes params "
                        f"{sorted(expected)}, got {sorted(params)}")
                if kind == PARAMETER and family in DISCRETE_FAMILIES:
                    raise InvalidParameterError(
                        f"node {name!r}: discrete family {family!r} is only "
                        "allowed on data nodes")
                if kind == DATA and "value" not in raw:
                    raise InvalidParameterError(
                        f"data node {name!r} requires a 'value'")
            node = Node(name, len(self.nodes), kind, family, op,
                        params, list(inputs), raw.get("value"))
            self.nodes.append(node)
            self._by_name[name] = node

    def _lookup(self, name, context):
        base, _ = _parse_ref(name)
        node = self._by_name.get(base)
        if node is None:
            raise UnknownReferenceError(f"{context}: unknown node {name!r}")
        return node

    def _iter_refs(self, node):
        """All reference strings appearing in a node's params and inputs."""
        def walk(v):
            if isinstance(v, str):
                yield v
            elif isinstance(v, (list, tuple)):
                for x in v:
                    yield from walk(x)
        for key, v in node.raw_params.items():
            if key == "distances":
                continue  # fixed matrix, never a reference
            yield from walk(v)
        for v in node.raw_inputs:
            if not isinstance(v, str):
                raise ArityMismatchError(
                    f"node {node.name!r}: inputs must be node names")
            yield v

    def _resolve_edges(self):
        self._children = [[] for _ in self.nodes]
        for node in self.nodes:
            seen = set()
            for ref in self._iter_refs(node):
                parent = self._lookup(ref, f"node {node.name!r}")
                if parent.index not in seen:
                    seen.add(parent.index)
                    node.parents.append(parent)
                    self._children[parent.index].append(node)

    def _toposort(self):
        indeg = [0] * len(self.nodes)
        for node in self.nodes:
            for parent in node.parents:
                indeg[node.index] += 1
        ready = [n.index for n in self.nodes if indeg[n.index] == 0]
        heapq.heapify(ready)
        order = []
        while ready:
            i = heapq.heappop(ready)
            order.append(i)
            for child in self._children[i]:
                indeg[child.index] -= 1
                if indeg[child.index] == 0:
                    heapq.heappush(ready, child.index)
        if len(order) != len(self.nodes):
            stuck = [n.name for n in self.nodes if indeg[n.index] > 0]
            raise CycleError(f"model graph has a cycle through {stuck}")
        self._topo = [self.nodes[i] for i in order]
        for pos, node in enumerate(self._topo):
            node.topo_pos = pos

    # -- parameter accessors -------------------------------------------

    def _scalar_accessor(self, node, key, value, *, positive=False):
        """Return (getter, literal-or-None) for a scalar parameter."""
        if isinstance(value, str):
            base, elem = _parse_ref(value)
            src = self._by_name[base]
            if elem is None:
                if src.dim != 1:
                    raise ArityMismatchError(
                        f"node {node.name!r}: param {key!r} references vector "
                        f"node {base!r} without an element index")
                return (lambda n=src: n.value), None
            if elem >= src.dim:
                raise UnknownReferenceError(
                    f"node {node.name!r}: {value!r} is out of range "
                    f"(dim {src.dim})")
            return (lambda n=src, k=elem: n.value[k]), None
        try:
            lit = float(value)
        except (TypeError, ValueError):
            raise ArityMismatchError(
                f"node {node.name!r}: param {key!r} must be a number or a "
                f"node reference, got {value!r}")
        if positive and lit <= 0.0:
            raise InvalidParameterError(
                f"node {node.name!r}: param {key!r} must be > 0, got {lit}")
        return (lambda v=lit: v), lit

    def _vector_accessor(self, node, key, value, dim):
        """Accessor for a length-`dim` vector (scalar literals broadcast)."""
        if isinstance(value, str):
            base, elem = _parse_ref(value)
            src = self._by_name[base]
            if elem is not None:
                raise ArityMismatchError(
                    f"node {node.name!r}: param {key!r} must be a vector")
            if src.dim == dim:
                return lambda n=src: n.value
            if src.dim == 1:
                buf = np.empty(dim)

                def fill(n=src, b=buf):
                    b.fill(n.value)
                    return b
                return fill
            raise ArityMismatchError(
                f"node {node.name!r}: param {key!r} has dim {src.dim}, "
                f"expected {dim}")
        try:
            arr = np.asarray(value, dtype=float)
        except (TypeError, ValueError):
            raise ArityMismatchError(
                f"node {node.name!r}: param {key!r} must be numeric or a "
                "node reference")
        if arr.ndim == 0:
            arr = np.full(dim, float(arr))
        if arr.shape != (dim,):
            raise ArityMismatchError(
                f"node {node.name!r}: param {key!r} has shape {arr.shape}, "
                f"expected ({dim},)")
        return lambda a=arr: a

    # -- dims and initial values ---------------------------------------

    def _infer_dim(self, node):
        if node.kind == DETERMINISTIC:
            if node.op == "expcov":
                d = np.asarray(node.raw_params["distances"], dtype=float)
                if d.ndim != 2 or d.shape[0] != d.shape[1]:
                    raise ArityMismatchError(
                        f"node {node.name!r}: distances must be a square matrix")
                return d.shape[0]
            if node.op in ("exp", "expit"):
                if len(node.raw_inputs) != 1:
                    raise ArityMismatchError(
                        f"node {node.name!r}: op {node.op!r} takes one input")
                return self._by_name[node.raw_inputs[0]].dim
            # affine: scalar unless some input is a vector
            coeffs = node.raw_params["coefficients"]
            if not isinstance(coeffs, (list, tuple)):
                raise ArityMismatchError(
                    f"node {node.name!r}: coefficients must be a list")
            if len(coeffs) != len(node.raw_inputs):
                raise ArityMismatchError(
                    f"node {node.name!r}: {len(coeffs)} coefficients for "
                    f"{len(node.raw_inputs)} inputs")
            dims = {self._by_name[i].dim for i in node.raw_inputs}
            dims.discard(1)
            if len(dims) > 1:
                raise ArityMismatchError(
                    f"node {node.name!r}: affine inputs have mixed dims {dims}")
            return dims.pop() if dims else 1
        if node.family == "mvnormal":
            cov = node.raw_params["cov"]
            if isinstance(cov, str):
                base, elem = _parse_ref(cov)
                if elem is not None:
                    raise ArityMismatchError(
                        f"node {node.name!r}: cov cannot be an element reference")
                return self._by_name[base].dim
            arr = np.asarray(cov, dtype=float)
            if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
                raise ArityMismatchError(
                    f"node {node.name!r}: cov must be a square matrix")
            return arr.shape[0]
        return 1

    def _initialize_values(self):
        for node in self._topo:
            node.dim = self._infer_dim(node)
            if node.kind == DETERMINISTIC:
                self._make_recompute(node)
                node._recompute()
                continue
            if node.raw_value is not None:
                if node.dim == 1:
                    node.value = float(node.raw_value)
                else:
                    v = np.asarray(node.raw_value, dtype=float).copy()
                    if v.shape != (node.dim,):
                        raise ArityMismatchError(
                            f"node {node.name!r}: value has shape {v.shape}, "
                            f"expected ({node.dim},)")
                    node.value = v
            elif node.kind == DATA:
                raise InvalidParameterError(
                    f"data node {node.name!r} requires a 'value'")
            else:
                node.value = self._default_initial(node)

    def _resolve_now(self, node, key):
        """Current value of a possibly-referencing scalar param (init time)."""
        v = node.raw_params[key]
        if isinstance(v, str):
            base, elem = _parse_ref(v)
            src = self._by_name[base].value
            return float(src if elem is None else src[elem])
        return float(v)

    def _default_initial(self, node):
        fam = node.family
        if fam == "normal":
            return self._resolve_now(node, "mean")
        if fam == "gamma":
            return self._resolve_now(node, "shape") / self._resolve_now(node, "rate")
        if fam == "beta":
            a = self._resolve_now(node, "a")
            b = self._resolve_now(node, "b")
            return a / (a + b)
        if fam == "mvnormal":
            mean = node.raw_params["mean"]
            if isinstance(mean, str):
                base, _ = _parse_ref(mean)
                src = self._by_name[base].value
                if np.ndim(src) == 0:
                    return np.full(node.dim, float(src))
                return np.asarray(src, dtype=float).copy()
            arr = np.asarray(mean, dtype=float)
            if arr.ndim == 0:
                return np.full(node.dim, float(arr))
            return arr.copy()
        raise InvalidParameterError(
            f"node {node.name!r}: no default initial value for {fam!r}")

    # -- deterministic recomputes --------------------------------------

    def _make_recompute(self, node):
        op = node.op
        if op == "affine":
            coeff_acc = [self._scalar_accessor(node, "coefficients", c)[0]
                         for c in node.raw_params["coefficients"]]
            offset_acc = self._scalar_accessor(node, "offset",
                                               node.raw_params["offset"])[0]
            srcs = [self._by_name[i] for i in node.raw_inputs]

            def recompute(n=node, cs=coeff_acc, off=offset_acc, xs=srcs):
                total = off()
                for c, x in zip(cs, xs):
                    total = total + c() * x.value
                n.value = total
                n._version += 1
            node._recompute = recompute
        elif op in ("exp", "expit"):
            src = self._by_name[node.raw_inputs[0]]
            vec = src.dim > 1
            buf = np.empty(src.dim) if vec else None
            logistic = op == "expit"

            def recompute(n=node, s=src, b=buf, lg=logistic, v=vec):
                x = s.value
                if v:
                    if lg:
                        np.negative(x, out=b)
                        np.exp(b, out=b)
                        b += 1.0
                        np.reciprocal(b, out=b)
                    else:
                        np.exp(x, out=b)
                    n.value = b
                elif lg:
                    n.value = 1.0 / (1.0 + math.exp(-x)) if x > -700 else 0.0
                else:
                    n.value = math.exp(x) if x < 700 else math.inf
                n._version += 1
            node._recompute = recompute
        else:  # expcov
            if node.raw_inputs:
                raise ArityMismatchError(
                    f"node {node.name!r}: expcov takes no positional inputs")
            dist = np.asarray(node.raw_params["distances"], dtype=float)
            if not np.allclose(dist, dist.T):
                raise InvalidParameterError(
                    f"node {node.name!r}: distance matrix must be symmetric")
            sigma_acc = self._scalar_accessor(node, "sigma",
                                              node.raw_params["sigma"])[0]
            range_acc = self._scalar_accessor(node, "range",
                                              node.raw_params["range"])[0]
            k = dist.shape[0]
            bufs = [np.empty((k, k)), np.empty((k, k))]

            def recompute(n=node, d=dist, sa=sigma_acc, ra=range_acc, bb=bufs):
                sigma = sa()
                rng = ra()
                scratch = bb[1]
                if rng <= 0.0 or sigma <= 0.0:
                    scratch.fill(np.nan)  # rejected downstream
                else:
                    np.divide(d, -rng, out=scratch)
                    np.exp(scratch, out=scratch)
                    s2 = sigma * sigma
                    scratch *= s2
                    # nugget keeps the factorization alive at extreme ranges
                    scratch[np.diag_indices_from(scratch)] += 1e-8 * s2 + 1e-12
                if n.value is not None and np.array_equal(scratch, n.value):
                    return  # unchanged (e.g. value restored after a reject)
                bb[0], bb[1] = scratch, bb[0]
                n.value = scratch
                n._version += 1
            node._recompute = recompute

    # -- density evaluators --------------------------------------------

    def _build_evaluators(self):
        for node in self._topo:
            if node.kind == DETERMINISTIC:
                continue
            self._make_logpdf(node)

    def _make_logpdf(self, node):
        fam = node.family
        counts = self.eval_counts
        idx = node.index

        def count():
            counts[idx] += 1

        if fam == "normal":
            mean_acc, _ = self._scalar_accessor(node, "mean",
                                                node.raw_params["mean"])
            sd_acc, _ = self._scalar_accessor(node, "sd",
                                              node.raw_params["sd"],
                                              positive=True)

            def lp(n=node, ma=mean_acc, sa=sd_acc):
                count()
                sd = sa()
                if sd <= 0.0:
                    return NEG_INF
                z = (n.value - ma()) / sd
                return -0.5 * z * z - math.log(sd) - 0.5 * LOG_2PI
        elif fam == "gamma":
            shape_acc, shape_lit = self._scalar_accessor(
                node, "shape", node.raw_params["shape"], positive=True)
            rate_acc, _ = self._scalar_accessor(
                node, "rate", node.raw_params["rate"], positive=True)
            lgam = math.lgamma(shape_lit) if shape_lit is not None else None

            def lp(n=node, sa=shape_acc, ra=rate_acc, lg=lgam):
                count()
                x = n.value
                if x <= 0.0:
                    return NEG_INF
                shape = sa()
                rate = ra()
                if shape <= 0.0 or rate <= 0.0:
                    return NEG_INF
                g = lg if lg is not None else math.lgamma(shape)
                return (shape * math.log(rate) + (shape - 1.0) * math.log(x)
                        - rate * x - g)
        elif fam == "beta":
            a_acc, a_lit = self._scalar_accessor(node, "a",
                                                 node.raw_params["a"],
                                                 positive=True)
            b_acc, b_lit = self._scalar_accessor(node, "b",
                                                 node.raw_params["b"],
                                                 positive=True)
            logB = (math.lgamma(a_lit) + math.lgamma(b_lit)
                    - math.lgamma(a_lit + b_lit)) if (
                a_lit is not None and b_lit is not None) else None

            def lp(n=node, aa=a_acc, ba=b_acc, lb=logB):
                count()
                x = n.value
                if x <= 0.0 or x >= 1.0:
                    return NEG_INF
                a = aa()
                b = ba()
                if a <= 0.0 or b <= 0.0:
                    return NEG_INF
                norm = lb if lb is not None else (
                    math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))
                return (a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x) - norm
        elif fam == "binomial":
            size = node.raw_params["size"]
            if isinstance(size, str):
                raise InvalidParameterError(
                    f"node {node.name!r}: binomial size must be a literal")
            if size != int(size) or size < 0:
                raise InvalidParameterError(
                    f"node {node.name!r}: binomial size must be a nonnegative "
                    f"integer, got {size}")
            size = int(size)
            y = float(node.value)
            if y != int(y) or not 0 <= y <= size:
                raise InvalidParameterError(
                    f"node {node.name!r}: value {y} outside 0..{size}")
            prob_acc, prob_lit = self._scalar_accessor(node, "prob",
                                                       node.raw_params["prob"])
            if prob_lit is not None and not 0.0 <= prob_lit <= 1.0:
                raise InvalidParameterError(
                    f"node {node.name!r}: prob must be in [0, 1]")
            lchoose = (math.lgamma(size + 1) - math.lgamma(y + 1)
                       - math.lgamma(size - y + 1))

            def lp(n=node, pa=prob_acc, m=size, yy=y, lc=lchoose):
                count()
                p = pa()
                if p <= 0.0:
                    return 0.0 if (p == 0.0 and yy == 0) else NEG_INF
                if p >= 1.0:
                    return 0.0 if (p == 1.0 and yy == m) else NEG_INF
                return lc + yy * math.log(p) + (m - yy) * math.log1p(-p)
        elif fam == "poisson":
            if node.kind == DATA:
                y = float(node.raw_value)
                if y != int(y) or y < 0:
                    raise InvalidParameterError(
                        f"node {node.name!r}: Poisson value must be a "
                        f"nonnegative integer, got {y}")
            rate_acc, _ = self._scalar_accessor(node, "rate",
                                                node.raw_params["rate"],
                                                positive=True)
            lgam_y = math.lgamma(float(node.value) + 1.0)

            def lp(n=node, ra=rate_acc, lg=lgam_y):
                count()
                lam = ra()
                y = n.value
                if lam <= 0.0:
                    return 0.0 if (lam == 0.0 and y == 0) else NEG_INF
                return y * math.log(lam) - lam - lg
        else:  # mvnormal
            lp = self._make_mvn_logpdf(node, count)
        node._logpdf = lp

    def _make_mvn_logpdf(self, node, count):
        dim = node.dim
        mean_acc = self._vector_accessor(node, "mean",
                                         node.raw_params["mean"], dim)
        cov = node.raw_params["cov"]
        if isinstance(cov, str):
            base, _ = _parse_ref(cov)
            cov_node = self._by_name[base]
            if cov_node.kind != DETERMINISTIC:
                raise ArityMismatchError(
                    f"node {node.name!r}: cov must be a literal matrix or a "
                    "reference to a deterministic node")
            cache = {"version": -1, "precision": None, "half_logdet": 0.0}

            def lp(n=node, ma=mean_acc, k=cov_node, c=cache):
                count()
                if k._version != c["version"]:
                    c["version"] = k._version
                    try:
                        c["precision"], c["half_logdet"] = _factor_cov(k.value)
                    except np.linalg.LinAlgError:
                        c["precision"] = None
                if c["precision"] is None:
                    return NEG_INF
                v = _kernels.mvn_logpdf(n.value, ma(), c["precision"],
                                        c["half_logdet"])
                return v if v == v else NEG_INF
            return lp
        arr = np.asarray(cov, dtype=float)
        if not np.allclose(arr, arr.T):
            raise InvalidParameterError(
                f"node {node.name!r}: covariance must be symmetric")
        try:
            precision, half_logdet = _factor_cov(arr)
        except np.linalg.LinAlgError:
            raise InvalidParameterError(
                f"node {node.name!r}: covariance is not positive definite")

        def lp(n=node, ma=mean_acc, p=precision, h=half_logdet):
            count()
            v = _kernels.mvn_logpdf(n.value, ma(), p, h)
            return v if v == v else NEG_INF
        return lp

    def _build_slots(self):
        self._slot_node: list[Node] = []
        self._slot_elem: list[int] = []
        names = []
        for node in self.nodes:
            if node.kind != PARAMETER:
                continue
            if node.family == "mvnormal":  # vector-valued, even at dim 1
                for k in range(node.dim):
                    self._slot_node.append(node)
                    self._slot_elem.append(k)
                    names.append(f"{node.name}[{k}]")
            else:
                self._slot_node.append(node)
                self._slot_elem.append(-1)
                names.append(node.name)
        self.slot_names: tuple[str, ...] = tuple(names)

    def _build_det_downstream(self):
        for node in self.nodes:
            found = {}
            stack = [c for c in self._children[node.index]
                     if c.kind == DETERMINISTIC]
            while stack:
                det = stack.pop()
                if det.index in found:
                    continue
                found[det.index] = det
                stack.extend(c for c in self._children[det.index]
                             if c.kind == DETERMINISTIC)
            node._det_down = tuple(sorted(found.values(),
                                          key=lambda n: n.topo_pos))

    # ------------------------------------------------------------------
    # public surface
    # ------------------------------------------------------------------

    @property
    def d(self) -> int:
        """Number of scalar parameter slots."""
        return len(self._slot_node)

    @property
    def initial_theta(self) -> np.ndarray:
        return self._initial_theta.copy()

    def node(self, name: str) -> Node:
        node = self._by_name.get(name)
        if node is None:
            raise UnknownReferenceError(f"unknown node {name!r}")
        return node

    def topo_order(self) -> list[str]:
        return [n.name for n in self._topo]

    def refresh(self):
        """Recompute any deterministic nodes made stale by slot writes."""
        lst = self._stale_list
        if not lst:
            return
        if len(lst) > 1:
            lst.sort(key=lambda n: n.topo_pos)
        for det in lst:
            det._recompute()
            det._stale = False
        lst.clear()

    def _mark_stale(self, node):
        for det in node._det_down:
            if not det._stale:
                det._stale = True
                self._stale_list.append(det)

    def get_slot(self, i: int) -> float:
        e = self._slot_elem[i]
        n = self._slot_node[i]
        return n.value if e < 0 else n.value[e]

    def set_slot(self, i: int, v: float):
        e = self._slot_elem[i]
        n = self._slot_node[i]
        if e < 0:
            n.value = v
        else:
            n.value[e] = v
        if n._det_down:
            self._mark_stale(n)

    def get_theta(self) -> np.ndarray:
        out = np.empty(len(self._slot_node))
        self.get_theta_into(out)
        return out

    def get_theta_into(self, out):
        for i, (n, e) in enumerate(zip(self._slot_node, self._slot_elem)):
            out[i] = n.value if e < 0 else n.value[e]

    def set_theta(self, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (self.d,):
            raise LengthMismatchError(
                f"expected {self.d} values, got shape {values.shape}")
        for i, v in enumerate(values):
            self.set_slot(i, float(v))

    def reset_to_initial(self):
        self.set_theta(self._initial_theta)

    def log_density(self, names: Iterable[str]) -> float:
        """Sum of log densities of the named stochastic nodes given parents."""
        nodes = []
        for name in names:
            node = self.node(name)
            if not node.is_stochastic:
                raise InvalidParameterError(
                    f"log_density: node {name!r} is deterministic")
            nodes.append(node)
        self.refresh()
        total = 0.0
        for n in nodes:
            total += n._logpdf()
        return total if total == total else NEG_INF

    def dependents(self, name: str) -> set[str]:
        """Stochastic nodes reachable through deterministic nodes only."""
        node = self.node(name)
        if node.kind != PARAMETER:
            raise InvalidParameterError(
                f"dependents: node {name!r} is not a sampled parameter")
        return {n.name for n in self._dependent_nodes(node)}

    def _dependent_nodes(self, node) -> tuple[Node, ...]:
        cached = self._dependents_cache.get(node.index)
        if cached is not None:
            return cached
        found = {}
        visited = set()
        stack = list(self._children[node.index])
        while stack:
            child = stack.pop()
            if child.index in visited:
                continue
            visited.add(child.index)
            if child.kind == DETERMINISTIC:
                stack.extend(self._children[child.index])
            else:
                found[child.index] = child
        result = tuple(sorted(found.values(), key=lambda n: n.index))
        self._dependents_cache[node.index] = result
        return result

    def slot_owner(self, i: int) -> Node:
        return self._slot_node[i]

    def reset_eval_counts(self):
        for i in range(len(self.eval_counts)):
            self.eval_counts[i] = 0

    def to_spec(self) -> dict:
        return self._spec


def _factor_cov(cov):
    """Cholesky-factor a covariance, returning (precision, 0.5*log|cov|).

    The factorization is the cached, covariance-change-only cost; callers
    evaluate the quadratic form fresh on each density call.
    """
    cov = np.asarray(cov, dtype=float)
    if not np.all(np.isfinite(cov)):
        raise np.linalg.LinAlgError("non-finite covariance")
    chol = np.linalg.cholesky(cov)
    half_logdet = float(np.log(np.diag(chol)).sum())
    inv_chol = np.linalg.inv(chol)
    precision = np.ascontiguousarray(inv_chol.T @ inv_chol)
    return precision, half_logdet


def build_graph(spec) -> ModelGraph:
    """Validate a model description and return the executable graph."""
    return ModelGraph(spec)


def load_model(path) -> ModelGraph:
    """Build a graph from a JSON model file."""
    with open(path, "r", encoding="utf-8") as fh:
        return ModelGraph(json.load(fh))
