"""2D task-and-motion-planning workbench with learned diffusion samplers."""

__version__ = "0.1.0"
