"""sketchlab: semi-automated SVG programming via program transformation."""

__version__ = "0.1.0"
