"""Network zeroth-order source seeking with formation control."""

__version__ = "0.1.0"
