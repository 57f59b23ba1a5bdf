"""Trefftz discontinuous Galerkin solver for the displacement Helmholtz
problem on an annulus with impedance-type and absorbing boundaries."""

__version__ = "0.1.0"

from .assembly import (  # noqa: E402
    DGSystem,
    DirichletCondition,
    FluxParams,
    GibcCondition,
    assemble_system,
)
from .basis import PlaneWaveBasis, recover_scalar_field  # noqa: E402
from .boundary import (  # noqa: E402
    GibcOperator,
    ModalBoundaryOperator,
    SingularSystemError,
    gibc_build_fem,
    gibc_build_trig,
)
from .exact import PlaneWave, exact_abc_series, exact_gibc_series, exact_scattering_series  # noqa: E402
from .mesh import AnnularMesh, build_annular_mesh  # noqa: E402
from .solve import SolutionField, solve  # noqa: E402
from .config import RunConfig  # noqa: E402
from .estimator import TrefftzScatteringSolver  # noqa: E402

__all__ = [
    "__version__",
    "AnnularMesh",
    "build_annular_mesh",
    "PlaneWaveBasis",
    "recover_scalar_field",
    "ModalBoundaryOperator",
    "GibcOperator",
    "SingularSystemError",
    "gibc_build_fem",
    "gibc_build_trig",
    "FluxParams",
    "DirichletCondition",
    "GibcCondition",
    "DGSystem",
    "assemble_system",
    "PlaneWave",
    "exact_abc_series",
    "exact_scattering_series",
    "exact_gibc_series",
    "SolutionField",
    "solve",
    "RunConfig",
    "TrefftzScatteringSolver",
]
