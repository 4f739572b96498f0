"""Helpers shared by the line-oriented text formats."""

from .errors import FormatError


def fmt(x: float) -> str:
    """Format a float with 17 significant digits so it parses back exactly."""
    return format(float(x), ".17g")


def parse_float(token: str, line_no: int, what: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise FormatError(f"line {line_no}: {what} is not a number: '{token}'") from None


def parse_int(token: str, line_no: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise FormatError(f"line {line_no}: {what} is not an integer: '{token}'") from None


def kv_value(token: str, key: str, line_no: int) -> str:
    """Extract the value of a 'key=value' token, checking the key name."""
    name, sep, value = token.partition("=")
    if not sep or name != key:
        raise FormatError(f"line {line_no}: expected '{key}=<value>', got '{token}'")
    return value
