"""Upper-midband (FR-3) coverage and coexistence simulator."""

__version__ = "0.1.0"
