"""GPU thermal-analysis toolchain: Fermi floorplans, power traces, a compact
4-layer thermal model and heat-map rendering."""

__version__ = "0.1.0"
