"""
Points-to types
===============

.. currentmodule:: probpts.lattice

A points-to type maps every program variable to a finite set of ``(address, probability)`` pairs: the addresses the
variable may hold, each with the probability that it holds it. The symbolic address of variable ``x`` is written
``x'``. Probabilities are exact :class:`fractions.Fraction` values throughout.

Only strictly positive probabilities are stored, so the *support* of a variable (the addresses it may hold) is exactly
the key set of its entry, and the *mass* of a variable (the probability that it holds any address) is the sum of its
entry. The mass of every variable is at most ``1``.

Types are ordered by pointwise inclusion of supports; probabilities play no part in the order. The least upper bound
of ``n`` types is their weighted join :func:`nabla` with every weight ``1/n``.


API reference
-------------

.. autoclass:: Address

.. autoclass:: Env

.. autoclass:: PtsType

.. autofunction:: bottom

.. autofunction:: nabla

.. autofunction:: lub

.. autofunction:: leq

.. autofunction:: models

.. autoexception:: LatticeError
"""
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Sequence, Set, Tuple, Union
from probpts.utils import Prob, format_prob


class LatticeError(ValueError):

    """
    Raised when points-to types are combined across different variable sets, or would leave the lattice.
    """


@dataclass(frozen=True, order=True)
class Address:

    """
    The symbolic address ``x'`` of variable ``x``.
    """

    of: str

    def __str__(self) -> str:
        return f"{self.of}'"

    @classmethod
    def parse(cls, text: str) -> "Address":
        assert text.endswith("'"), f"{text!r} should have format \"x'\""
        return cls(text[:-1])


Value = Union[int, Address]

AddrProbSet = Mapping[Address, Prob]


def format_value(value: Value) -> str:
    return str(value)


class Env(Mapping[str, Value]):

    """
    An immutable concrete store, mapping every program variable to an integer or an :class:`Address`.
    """

    __slots__ = ("_values",)

    def __init__(self, values: Mapping[str, Value]) -> None:
        self._values = dict(values)

    @classmethod
    def zeros(cls, names: Iterable[str]) -> "Env":
        return cls({name: 0 for name in names})

    def set(self, name: str, value: Value) -> "Env":
        assert name in self._values, f"unknown variable {name!r}"
        values = dict(self._values)
        values[name] = value
        return Env(values)

    def __getitem__(self, name: str) -> Value:
        return self._values[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._values)

    def __len__(self) -> int:
        return len(self._values)

    def __hash__(self) -> int:
        return hash(tuple(self._values.items()))

    def __repr__(self) -> str:
        return f"Env({{{format_env(self)}}})"


def format_env(env: Env) -> str:
    return ", ".join(f"{name}={format_value(value)}" for name, value in env.items())


class PtsType:

    """
    A points-to type over a fixed, ordered set of variables. Instances are immutable.

    Zero probabilities are dropped on construction.

    :raises LatticeError: if a probability lies outside ``[0, 1]`` or the mass of a variable exceeds ``1``.
    """

    __slots__ = ("_map",)

    def __init__(self, entries: Mapping[str, Mapping[Address, Union[Prob, int]]]) -> None:
        table: Dict[str, Dict[Address, Prob]] = {}
        for name, addrs in entries.items():
            row: Dict[Address, Prob] = {}
            for addr, prob in sorted(addrs.items()):
                prob = Fraction(prob)
                if not 0 <= prob <= 1:
                    raise LatticeError(f"probability {prob} of {addr} in {name} should be in [0, 1]")
                if prob:
                    row[addr] = prob
            if sum(row.values()) > 1:
                raise LatticeError(f"mass of {name} should be <= 1")
            table[name] = row
        self._map = table

    @property
    def vars(self) -> Tuple[str, ...]:
        return tuple(self._map)

    def __getitem__(self, name: str) -> AddrProbSet:
        try:
            return MappingProxyType(self._map[name])
        except KeyError:
            raise LatticeError(f"unknown variable {name!r}") from None

    def __contains__(self, name: object) -> bool:
        return name in self._map

    def items(self) -> Iterator[Tuple[str, AddrProbSet]]:
        for name in self._map:
            yield name, self[name]

    def update(self, changes: Mapping[str, AddrProbSet]) -> "PtsType":
        for name in changes:
            if name not in self._map:
                raise LatticeError(f"unknown variable {name!r}")
        entries: Dict[str, Mapping[Address, Prob]] = dict(self._map)
        entries.update(changes)
        return PtsType(entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PtsType):
            return NotImplemented
        return self._map == other._map

    def __hash__(self) -> int:
        return hash(tuple((name, tuple(row.items())) for name, row in self._map.items()))

    def __repr__(self) -> str:
        rows = ", ".join(
            f"{name}: {{{', '.join(f'{addr}: {prob}' for addr, prob in row.items())}}}"
            for name, row in self._map.items()
        )
        return f"PtsType({{{rows}}})"


def _check_vars(types: Iterable[PtsType]) -> Tuple[str, ...]:
    names = None
    expected: Set[str] = set()
    for pts in types:
        if names is None:
            names = pts.vars
            expected = set(names)
        elif set(pts.vars) != expected:
            raise LatticeError(f"variable sets differ: {sorted(expected)} and {sorted(pts.vars)}")
    return names or ()


def bottom(names: Iterable[str]) -> PtsType:
    """
    The least points-to type: every variable maps to the empty set.
    """
    return PtsType({name: {} for name in names})


def mass(pts: PtsType, name: str) -> Prob:
    return sum(pts[name].values(), Fraction(0))


def support(pts: PtsType, name: str) -> Set[Address]:
    return set(pts[name])


def scale(pts: PtsType, q: Prob) -> PtsType:
    assert 0 <= q <= 1, "q should be in [0, 1]"
    return PtsType({name: {addr: prob * q for addr, prob in row.items()} for name, row in pts.items()})


def nabla(weighted: Sequence[Tuple[PtsType, Prob]]) -> PtsType:
    """
    Joins points-to types with respect to weights. Each address in the support of some input gets the probability
    ``sum(q * p)`` over the inputs ``(pts, q)`` where it has probability ``p``.

    :raises LatticeError: if there are no inputs, the variable sets differ, or the weights sum above ``1``.
    """
    if not weighted:
        raise LatticeError("nabla needs at least one input")
    names = _check_vars(pts for pts, _ in weighted)
    for _, q in weighted:
        if not 0 <= q <= 1:
            raise LatticeError(f"weight {q} should be in [0, 1]")
    if sum((q for _, q in weighted), Fraction(0)) > 1:
        raise LatticeError("weights should sum to <= 1")
    entries: Dict[str, Dict[Address, Prob]] = {}
    for name in names:
        row: Dict[Address, Prob] = {}
        for pts, q in weighted:
            if not q:
                continue
            for addr, prob in pts[name].items():
                row[addr] = row.get(addr, Fraction(0)) + q * prob
        entries[name] = row
    return PtsType(entries)


def lub(types: Sequence[PtsType]) -> PtsType:
    """
    The least upper bound of ``types``: their :func:`nabla` with equal weights.

    :raises LatticeError: if ``types`` is empty.
    """
    if not types:
        raise LatticeError("lub of an empty set is undefined")
    weight = Fraction(1, len(types))
    return nabla([(pts, weight) for pts in types])


def leq(pts: PtsType, other: PtsType) -> bool:
    """
    Pointwise inclusion of supports.
    """
    _check_vars((pts, other))
    return all(set(pts[name]) <= set(other[name]) for name in pts.vars)


def equiv(pts: PtsType, other: PtsType) -> bool:
    _check_vars((pts, other))
    return all(set(pts[name]) == set(other[name]) for name in pts.vars)


def models(env: Env, pts: PtsType) -> bool:
    """
    Whether every address held by a variable in ``env`` lies in that variable's support under ``pts``.
    """
    return not violations(env, pts)


def violations(env: Env, pts: PtsType) -> List[Tuple[str, Address]]:
    return [
        (name, value)
        for name, value in env.items()
        if isinstance(value, Address) and value not in pts[name]
    ]


# Serialization.

def dump_pts(pts: PtsType) -> Dict[str, List[List[Any]]]:
    return {
        name: [[str(addr), format_prob(prob), round(float(prob), 6)] for addr, prob in row.items()]
        for name, row in pts.items()
    }


def load_pts(data: Mapping[str, Sequence[Sequence[Any]]]) -> PtsType:
    return PtsType({
        name: {Address.parse(addr): Fraction(prob) for addr, prob, *_ in row}
        for name, row in data.items()
    })


def dump_env(env: Env) -> Dict[str, Any]:
    return {name: str(value) if isinstance(value, Address) else value for name, value in env.items()}
