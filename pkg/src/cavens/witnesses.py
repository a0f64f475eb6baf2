"""Nonclassicality witnesses evaluated on a single moment state.

Sign conventions: a witness fires (detects a nonclassical feature) when its
value drops below zero, except the quadrature variances, whose classical
boundary is the coherent-state value 1/4.  Fourth- and sixth-order
correlators are reduced to stored moments with the decoupling rules of
``closure``; quadrature variances need second moments only.

Every witness is a real quantity on a conjugate-consistent state.  Values
are computed in complex arithmetic and the real part is returned only after
checking that the imaginary residue is below ``IMAG_TOL``; a larger residue
signals an inconsistent state (or a transcription bug) and raises
``InternalConsistencyError`` instead of being silently discarded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .closure import annihilator, creator, decouple3, decouple4, number_triple_product
from .model import Moment, MomentState

__all__ = [
    "IMAG_TOL",
    "OCCUPATION_FLOOR",
    "MODE_KEYS",
    "PAIR_KEYS",
    "ORDERED_PAIR_KEYS",
    "PARTITION_KEYS",
    "InternalConsistencyError",
    "WitnessRecord",
    "mandel_q",
    "antibunch_single",
    "antibunch_inter",
    "quadrature_variances",
    "intermodal_quadrature_variances",
    "duan",
    "hz_pair",
    "steering",
    "bisep",
    "evaluate",
]

IMAG_TOL = 1e-10
# below this occupation the Mandel parameter is reported as undefined (NaN)
OCCUPATION_FLOOR = 1e-12

MODE_KEYS = ("A", "B", "C")
PAIR_KEYS = ("AB", "BC", "AC")
ORDERED_PAIR_KEYS = ("AB", "BA", "BC", "CB", "AC", "CA")
# partition key "AB|C" means the compound mode AB against the single mode C
PARTITION_KEYS = ("AB|C", "BC|A", "AC|B")

_OCC = {"A": Moment.AdA, "B": Moment.BdB, "C": Moment.CdC}
_SQ = {"A": (Moment.AA, Moment.AdAd), "B": (Moment.BB, Moment.BdBd),
       "C": (Moment.CC, Moment.CdCd)}
_MEAN = {"A": (Moment.A, Moment.Ad), "B": (Moment.B, Moment.Bd),
         "C": (Moment.C, Moment.Cd)}
_CROSS = {
    ("A", "B"): (Moment.AB, Moment.ABd, Moment.AdB, Moment.AdBd),
    ("B", "C"): (Moment.BC, Moment.BCd, Moment.BdC, Moment.BdCd),
    ("A", "C"): (Moment.AC, Moment.ACd, Moment.AdC, Moment.AdCd),
}


class InternalConsistencyError(RuntimeError):
    """A nominally real witness value carried a large imaginary residue."""


def _real(value: complex, what: str) -> float:
    value = complex(value)
    if abs(value.imag) >= IMAG_TOL:
        raise InternalConsistencyError(
            f"{what} has imaginary residue {value.imag:.3e} (state inconsistent)"
        )
    return value.real


def _cross(state: MomentState, a: str, b: str):
    """(<ab>, <ab+>, <a+b>, <a+b+>) for an unordered mode pair."""
    if (a, b) in _CROSS:
        ab, abd, adb, adbd = (state[s] for s in _CROSS[(a, b)])
        return ab, abd, adb, adbd
    ab, abd, adb, adbd = (state[s] for s in _CROSS[(b, a)])
    # swap: <ba+> read as <a+b> and vice versa (cross-mode operators commute)
    return ab, adb, abd, adbd


def mandel_q(state: MomentState, mode: str) -> float:
    """Normalized occupation-variance parameter; negative means sub-Poissonian.

    Closed form after decoupling the fourth moment:
    (<ad2><a2> + <ada>^2 - 2<ad>^2<a>^2) / <ada>, undefined (NaN) at
    negligible occupation where the normalization is singular.
    """
    occ = _real(state[_OCC[mode]], f"<n_{mode}>")
    if occ < OCCUPATION_FLOOR:
        return math.nan
    return antibunch_single(state, mode) / occ


def antibunch_single(state: MomentState, mode: str) -> float:
    """Single-mode antibunching witness <ad ad a a> - <ad a>^2 (decoupled)."""
    a = annihilator(mode)
    ad = creator(mode)
    fourth = decouple4(state, ad, ad, a, a)
    occ = state[_OCC[mode]]
    return _real(fourth - occ * occ, f"antibunch_{mode}")


def antibunch_inter(state: MomentState, pair: tuple[str, str]) -> float:
    """Intermodal antibunching witness <ad bd b a> - <ad a><bd b> (decoupled)."""
    a, b = pair
    fourth = decouple4(state, creator(a), creator(b), annihilator(b), annihilator(a))
    return _real(fourth - state[_OCC[a]] * state[_OCC[b]], f"antibunch_{a}{b}")


def quadrature_variances(state: MomentState, mode: str) -> tuple[float, float]:
    """Variances of X = (a + ad)/2 and Y = (a - ad)/2i; squeezed below 1/4."""
    sq, sqd = (state[s] for s in _SQ[mode])
    m, md = (state[s] for s in _MEAN[mode])
    occ = state[_OCC[mode]]
    vx = (sq + sqd + 2.0 * occ + 1.0) / 4.0 - ((m + md) / 2.0) ** 2
    vy = (-sq - sqd + 2.0 * occ + 1.0) / 4.0 - ((m - md) / 2j) ** 2
    return _real(vx, f"var_x_{mode}"), _real(vy, f"var_y_{mode}")


def intermodal_quadrature_variances(
    state: MomentState, pair: tuple[str, str]
) -> tuple[float, float]:
    """Variances of X_ab = (a+ad+b+bd)/2sqrt2 and the matching Y quadrature."""
    a, b = pair
    sqa, sqad = (state[s] for s in _SQ[a])
    sqb, sqbd = (state[s] for s in _SQ[b])
    na, nb = state[_OCC[a]], state[_OCC[b]]
    ma, mad = (state[s] for s in _MEAN[a])
    mb, mbd = (state[s] for s in _MEAN[b])
    ab, abd, adb, adbd = _cross(state, a, b)

    vx = (
        sqa + sqad + 2.0 * na + 1.0
        + sqb + sqbd + 2.0 * nb + 1.0
        + 2.0 * (ab + abd + adb + adbd)
    ) / 8.0 - ((ma + mad + mb + mbd) / (2.0 * math.sqrt(2.0))) ** 2
    vy = (
        -sqa - sqad + 2.0 * na + 1.0
        - sqb - sqbd + 2.0 * nb + 1.0
        - 2.0 * (ab - abd - adb + adbd)
    ) / 8.0 - ((ma - mad + mb - mbd) / (2j * math.sqrt(2.0))) ** 2
    return _real(vx, f"var_x_{a}{b}"), _real(vy, f"var_y_{a}{b}")


def duan(state: MomentState, pair: tuple[str, str]) -> float:
    """Inseparability witness 4(dX_ab)^2 + 4(dY_ab)^2 - 2; entangled if < 0."""
    vx, vy = intermodal_quadrature_variances(state, pair)
    return 4.0 * vx + 4.0 * vy - 2.0


def hz_pair(state: MomentState, pair: tuple[str, str]) -> tuple[float, float]:
    """The two moment inseparability witnesses for a mode pair.

    E  = <ad a bd b> - |<a bd>|^2   (fourth moment decoupled)
    E~ = <ad a><bd b> - |<a b>|^2
    """
    a, b = pair
    fourth = decouple4(state, creator(a), annihilator(a), creator(b), annihilator(b))
    ab, abd, adb, adbd = _cross(state, a, b)
    e = _real(fourth - abd * adb, f"hz_e_{a}{b}")
    etilde = _real(state[_OCC[a]] * state[_OCC[b]] - ab * adbd, f"hz_etilde_{a}{b}")
    return e, etilde


def steering(state: MomentState, ordered_pair: tuple[str, str]) -> float:
    """Steering witness for the ordered pair (x, y): E_xy + <xd x>/2 < 0.

    The occupation offset comes from the first (steered-by) mode, so the
    witness is asymmetric under swapping the pair.  This is the upper branch
    of a two-sided condition; the lower branch is never the binding one for
    detection and plays no role in tick/cross scoring.
    """
    x, y = ordered_pair
    e, _ = hz_pair(state, (x, y))
    return e + _real(state[_OCC[x]], f"<n_{x}>") / 2.0


def bisep(state: MomentState, partition: tuple[str, str, str]) -> tuple[float, float]:
    """Biseparability witnesses for the partition ab|c.

    E  = <ad a bd b cd c> - |<a b cd>|^2   (sixth moment via the recursive
         number-product closure, third moment via the three-factor rule)
    E' = <ad a bd b><cd c> - |<a b c>|^2
    """
    a, b, c = partition
    sixth = number_triple_product(state) if set(partition) == {"A", "B", "C"} else None
    if sixth is None:
        raise ValueError(f"partition must cover all three modes, got {partition}")
    abc_dag = decouple3(state, annihilator(a), annihilator(b), creator(c))
    abc = decouple3(state, annihilator(a), annihilator(b), annihilator(c))
    fourth = decouple4(state, creator(a), annihilator(a), creator(b), annihilator(b))
    e = _real(sixth - abc_dag * abc_dag.conjugate(), f"bisep_e_{a}{b}|{c}")
    eprime = _real(
        fourth * state[_OCC[c]] - abc * abc.conjugate(), f"bisep_eprime_{a}{b}|{c}"
    )
    return e, eprime


@dataclass(frozen=True)
class WitnessRecord:
    """All witness values at one time point, keyed by mode/pair/partition."""

    mandel: dict
    antibunch: dict
    antibunch_pair: dict
    var_x: dict
    var_y: dict
    var_x_pair: dict
    var_y_pair: dict
    duan: dict
    hz_e: dict
    hz_etilde: dict
    steering: dict
    bisep_e: dict
    bisep_eprime: dict

    @staticmethod
    def column_names() -> list[str]:
        names = []
        names += [f"mandel_{m}" for m in MODE_KEYS]
        names += [f"antibunch_{m}" for m in MODE_KEYS]
        names += [f"antibunch_{p}" for p in PAIR_KEYS]
        for m in MODE_KEYS:
            names += [f"var_x_{m}", f"var_y_{m}"]
        for p in PAIR_KEYS:
            names += [f"var_x_{p}", f"var_y_{p}"]
        names += [f"duan_{p}" for p in PAIR_KEYS]
        names += [f"hz_e_{p}" for p in PAIR_KEYS]
        names += [f"hz_etilde_{p}" for p in PAIR_KEYS]
        names += [f"steering_{p}" for p in ORDERED_PAIR_KEYS]
        names += [f"bisep_e_{k.replace('|', '_')}" for k in PARTITION_KEYS]
        names += [f"bisep_eprime_{k.replace('|', '_')}" for k in PARTITION_KEYS]
        return names

    def column_values(self) -> list[float]:
        vals = []
        vals += [self.mandel[m] for m in MODE_KEYS]
        vals += [self.antibunch[m] for m in MODE_KEYS]
        vals += [self.antibunch_pair[p] for p in PAIR_KEYS]
        for m in MODE_KEYS:
            vals += [self.var_x[m], self.var_y[m]]
        for p in PAIR_KEYS:
            vals += [self.var_x_pair[p], self.var_y_pair[p]]
        vals += [self.duan[p] for p in PAIR_KEYS]
        vals += [self.hz_e[p] for p in PAIR_KEYS]
        vals += [self.hz_etilde[p] for p in PAIR_KEYS]
        vals += [self.steering[p] for p in ORDERED_PAIR_KEYS]
        vals += [self.bisep_e[k] for k in PARTITION_KEYS]
        vals += [self.bisep_eprime[k] for k in PARTITION_KEYS]
        return vals


_PAIRS = {"AB": ("A", "B"), "BC": ("B", "C"), "AC": ("A", "C")}
_ORDERED = {k: (k[0], k[1]) for k in ORDERED_PAIR_KEYS}
_PARTITIONS = {"AB|C": ("A", "B", "C"), "BC|A": ("B", "C", "A"), "AC|B": ("A", "C", "B")}


def evaluate(state: MomentState) -> WitnessRecord:
    """Evaluate the full witness catalog at one state."""
    var_x, var_y = {}, {}
    for m in MODE_KEYS:
        var_x[m], var_y[m] = quadrature_variances(state, m)
    var_x_pair, var_y_pair = {}, {}
    hz_e, hz_etilde = {}, {}
    for key, pair in _PAIRS.items():
        var_x_pair[key], var_y_pair[key] = intermodal_quadrature_variances(state, pair)
        hz_e[key], hz_etilde[key] = hz_pair(state, pair)
    bisep_e, bisep_eprime = {}, {}
    for key, part in _PARTITIONS.items():
        bisep_e[key], bisep_eprime[key] = bisep(state, part)
    record = WitnessRecord(
        mandel={m: mandel_q(state, m) for m in MODE_KEYS},
        antibunch={m: antibunch_single(state, m) for m in MODE_KEYS},
        antibunch_pair={k: antibunch_inter(state, p) for k, p in _PAIRS.items()},
        var_x=var_x,
        var_y=var_y,
        var_x_pair=var_x_pair,
        var_y_pair=var_y_pair,
        duan={k: duan(state, p) for k, p in _PAIRS.items()},
        hz_e=hz_e,
        hz_etilde=hz_etilde,
        steering={k: steering(state, p) for k, p in _ORDERED.items()},
        bisep_e=bisep_e,
        bisep_eprime=bisep_eprime,
    )
    for name, value in zip(record.column_names(), record.column_values()):
        if not (math.isfinite(value) or name.startswith("mandel_")):
            raise InternalConsistencyError(f"non-finite witness value {name}={value}")
    return record
