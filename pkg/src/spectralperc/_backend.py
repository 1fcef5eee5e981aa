"""Kernel backend selection: compiled extension if built, else pure Python."""

try:
    from . import _kernels as _impl

    BACKEND = "cython"
except ImportError:  # pragma: no cover - depends on build environment
    from . import _kernels_py as _impl

    BACKEND = "python"

crossing_site_many = _impl.crossing_site_many
crossing_bond_many = _impl.crossing_bond_many
arm_summary_many = _impl.arm_summary_many
pivotal_site_many = _impl.pivotal_site_many
pivotal_bond_many = _impl.pivotal_bond_many
tabulate_site = _impl.tabulate_site
tabulate_bond = _impl.tabulate_bond


def backend_name():
    return BACKEND
