"""Decoupling of higher-order correlators into stored first/second moments.

Third- and fourth-order normal-ordered correlators are approximated by the
linearized-correction (Bogoliubov-style) rules

    <xyz>  ~ <xy><z> + <x><yz> + <xz><y> - 2<x><y><z>
    <wxyz> ~ <wx><yz> + <wy><xz> + <wz><xy> - 2<w><x><y><z>

evaluated on the stored moments.  For zero-mean data the four-factor rule
reduces to the exact Gaussian (Isserlis) pair expansion.  The sixth-order
number correlator <AdA BdB CdC> is built by applying the three-factor rule
to the composite number factors, with each composite pair expanded by the
four-factor rule.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import Moment, MomentState

__all__ = [
    "OperatorFactor",
    "annihilator",
    "creator",
    "single_moment",
    "pair_moment",
    "decouple3",
    "decouple4",
    "number_triple_product",
]


@dataclass(frozen=True)
class OperatorFactor:
    """One mode operator in a correlator word: a mode label and a dagger flag."""

    mode: str
    daggered: bool = False

    def __post_init__(self):
        if self.mode not in ("A", "B", "C"):
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def conjugate(self) -> "OperatorFactor":
        return OperatorFactor(self.mode, not self.daggered)


def annihilator(mode: str) -> OperatorFactor:
    return OperatorFactor(mode, False)


def creator(mode: str) -> OperatorFactor:
    return OperatorFactor(mode, True)


_SINGLE = {
    ("A", False): Moment.A, ("B", False): Moment.B, ("C", False): Moment.C,
    ("A", True): Moment.Ad, ("B", True): Moment.Bd, ("C", True): Moment.Cd,
}

_SAME = {
    ("A", False, False): Moment.AA, ("A", True, True): Moment.AdAd,
    ("A", True, False): Moment.AdA,
    ("B", False, False): Moment.BB, ("B", True, True): Moment.BdBd,
    ("B", True, False): Moment.BdB,
    ("C", False, False): Moment.CC, ("C", True, True): Moment.CdCd,
    ("C", True, False): Moment.CdC,
}

# Cross-mode slots keyed by (first mode, first dagger, second dagger) with the
# modes in canonical A < B < C order; cross-mode factors commute freely.
_CROSS = {
    ("A", "B", False, False): Moment.AB, ("A", "B", False, True): Moment.ABd,
    ("A", "B", True, False): Moment.AdB, ("A", "B", True, True): Moment.AdBd,
    ("B", "C", False, False): Moment.BC, ("B", "C", False, True): Moment.BCd,
    ("B", "C", True, False): Moment.BdC, ("B", "C", True, True): Moment.BdCd,
    ("A", "C", False, False): Moment.AC, ("A", "C", False, True): Moment.ACd,
    ("A", "C", True, False): Moment.AdC, ("A", "C", True, True): Moment.AdCd,
}


def single_moment(state: MomentState, x: OperatorFactor) -> complex:
    return state[_SINGLE[(x.mode, x.daggered)]]


def pair_moment(state: MomentState, x: OperatorFactor, y: OperatorFactor) -> complex:
    """Expectation of the ordered product xy, resolved to stored slots.

    Same-mode anti-normal pairs pick up the commutator: <a ad> = <ad a> + 1.
    """
    if x.mode == y.mode:
        if not x.daggered and y.daggered:
            return state[_SAME[(x.mode, True, False)]] + 1.0
        return state[_SAME[(x.mode, x.daggered, y.daggered)]]
    if x.mode > y.mode:
        x, y = y, x
    return state[_CROSS[(x.mode, y.mode, x.daggered, y.daggered)]]


def decouple3(
    state: MomentState,
    x: OperatorFactor,
    y: OperatorFactor,
    z: OperatorFactor,
) -> complex:
    """Three-factor decoupling <xyz> ~ <xy><z> + <x><yz> + <xz><y> - 2<x><y><z>."""
    sx, sy, sz = (single_moment(state, f) for f in (x, y, z))
    return (
        pair_moment(state, x, y) * sz
        + sx * pair_moment(state, y, z)
        + pair_moment(state, x, z) * sy
        - 2.0 * sx * sy * sz
    )


def decouple4(
    state: MomentState,
    w: OperatorFactor,
    x: OperatorFactor,
    y: OperatorFactor,
    z: OperatorFactor,
) -> complex:
    """Four-factor decoupling: all three pair pairings minus twice the mean product."""
    return (
        pair_moment(state, w, x) * pair_moment(state, y, z)
        + pair_moment(state, w, y) * pair_moment(state, x, z)
        + pair_moment(state, w, z) * pair_moment(state, x, y)
        - 2.0
        * single_moment(state, w)
        * single_moment(state, x)
        * single_moment(state, y)
        * single_moment(state, z)
    )


def number_triple_product(state: MomentState) -> complex:
    """Closed form for the sixth-order correlator <AdA BdB CdC>.

    Treats the three number operators as composite factors in the
    three-factor rule; each composite pair <XY> is a four-factor decoupling
    and each composite single <X> is a stored occupation.
    """
    na = state[Moment.AdA]
    nb = state[Moment.BdB]
    nc = state[Moment.CdC]
    nab = decouple4(state, creator("A"), annihilator("A"), creator("B"), annihilator("B"))
    nbc = decouple4(state, creator("B"), annihilator("B"), creator("C"), annihilator("C"))
    nac = decouple4(state, creator("A"), annihilator("A"), creator("C"), annihilator("C"))
    return nab * nc + na * nbc + nac * nb - 2.0 * na * nb * nc
