"""Time-domain PML for Maxwell scattering by a sphere: modal solvers and checks."""

__version__ = "0.1.0"
