"""titsforge: an exact laboratory for the affine building of SL3 over p-adic fields."""

__version__ = "0.1.0"
