from fractions import Fraction
from typing import Tuple, Union


Prob = Fraction


def parse_prob(literal: str) -> Prob:
    # Fraction parses "0.6" and "3/5" exactly.
    try:
        value = Fraction(literal)
    except (ValueError, ZeroDivisionError) as ex:
        raise ValueError(f"invalid probability {literal!r}") from ex
    if not 0 <= value <= 1:
        raise ValueError(f"probability {literal!r} should be in [0, 1]")
    return value


def format_prob(value: Union[Fraction, int]) -> str:
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def format_decimal(value: Union[Fraction, int]) -> str:
    return f"{float(value):.6f}"


def parse_sockname(sockname: Union[Tuple, str]) -> Tuple[str, str]:
    if isinstance(sockname, tuple):
        return sockname[0], str(sockname[1])
    return "unix", sockname
