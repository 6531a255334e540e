"""Built-in scenarios reproducing the worked examples and controls.

Each scenario is stored as TOML text and goes through the same loader as a
user file, so the gallery doubles as a round-trip test of the schema.  The
[expect] table encodes the documented outcome of every check; `gallery run`
exits 0 exactly when the outcomes match.
"""

from __future__ import annotations

from .errors import SchemaError
from .scenario import Scenario, loads_scenario

_SCENARIOS: dict[str, str] = {}


def _register(name: str, text: str):
    _SCENARIOS[name] = text.strip() + "\n"


_register(
    "so3_liepoisson",
    """
name = "so3_liepoisson"
description = "Coadjoint action algebroid over the Lie-Poisson structure on so(3)*; hamiltonian with the trivial connection and the coordinate projection as momentum section."
jet_order = 2

[chart]
coordinates = ["x1", "x2", "x3"]

[poisson]
matrix = [["0", "x3", "-x2"], ["-x3", "0", "x1"], ["x2", "-x1", "0"]]

[sampling]
seed = 42
count = 25
box = [[-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0]]

[algebroid]
kind = "action"
frame = ["e1", "e2", "e3"]
anchor = [["0", "x3", "-x2"], ["-x3", "0", "x1"], ["x2", "-x1", "0"]]
structure = [
  [[0, 0, 0], [0, 0, 1], [0, -1, 0]],
  [[0, 0, -1], [0, 0, 0], [1, 0, 0]],
  [[0, 1, 0], [-1, 0, 0], [0, 0, 0]],
]

[connection]
kind = "trivial"

[momentum]
components = ["x1", "x2", "x3"]

[theorem41]
x_count = 3

[checks]
run = ["jacobi", "algebroid", "H1", "H2", "H3", "pointwise", "invariance", "theorem41", "bivector_map"]
""",
)

_register(
    "so3_cotangent",
    """
name = "so3_cotangent"
description = "Cotangent algebroid of the Lie-Poisson so(3)* chart (isomorphic to the coadjoint action algebroid); the negative Euler vector field is a bracket-compatible momentum section for the trivial connection."
jet_order = 2

[chart]
coordinates = ["x1", "x2", "x3"]

[poisson]
matrix = [["0", "x3", "-x2"], ["-x3", "0", "x1"], ["x2", "-x1", "0"]]

[sampling]
seed = 42
count = 25

[algebroid]
kind = "cotangent"

[connection]
kind = "trivial"

[momentum]
components = ["-x1", "-x2", "-x3"]

[checks]
run = ["jacobi", "H1", "H2", "H3", "bivector_map"]
""",
)

_register(
    "zeromu",
    """
name = "zeromu"
description = "Cotangent algebroid of Pi = dx^dy on R^3 with the trivial connection; mu = -x dx - y dy is a momentum section that vanishes on a line but is not bracket-compatible (L_mu Pi = 2 Pi)."
jet_order = 2

[chart]
coordinates = ["x", "y", "z"]

[poisson]
matrix = [["0", "1", "0"], ["-1", "0", "0"], ["0", "0", "0"]]

[sampling]
seed = 42
count = 25

[algebroid]
kind = "cotangent"

[connection]
kind = "trivial"

[momentum]
components = ["-x", "-y", "0"]

[coisotropy]
point = [0.0, 0.0, 1.0]

[checks]
run = ["jacobi", "H1", "H2", "H3", "liouville", "bivector_map", "coisotropy"]

[expect]
H3 = "fail"
liouville = "fail"
bivector_map = "fail"
""",
)

_register(
    "zeromu_shifted",
    """
name = "zeromu_shifted"
description = "Same data as zeromu with mu' = mu - d/dz; the covariant derivatives agree, so mu' is a momentum section too (and still not bracket-compatible)."
jet_order = 2

[chart]
coordinates = ["x", "y", "z"]

[poisson]
matrix = [["0", "1", "0"], ["-1", "0", "0"], ["0", "0", "0"]]

[sampling]
seed = 42
count = 25

[algebroid]
kind = "cotangent"

[connection]
kind = "trivial"

[momentum]
components = ["-x", "-y", "-1"]

[checks]
run = ["H1", "H2", "H3"]

[expect]
H3 = "fail"
""",
)

_register(
    "darboux_local",
    """
name = "darboux_local"
description = "Darboux chart on R^2 with eta = q dp + dp; mu = Pi# eta is nowhere vanishing near 0 and Liouville, so the cotangent algebroid is hamiltonian and the constructive momentum-connection builder succeeds."
jet_order = 2

[chart]
coordinates = ["q", "p"]

[poisson]
matrix = [["0", "1"], ["-1", "0"]]

[sampling]
seed = 42
count = 25
box = [[-0.5, 0.5], [-0.5, 0.5]]

[algebroid]
kind = "cotangent"

[connection]
kind = "trivial"

[momentum]
components = ["-(q + 1)", "0"]

[eta]
components = ["0", "q + 1"]

[checks]
# mu is a momentum section for the *built* connection, not the trivial one:
# momentum_builder verifies H2/H1 of the constructed connection
run = ["jacobi", "H1", "liouville", "momentum_builder"]
""",
)

_register(
    "lie_algebra_bundle_so3",
    """
name = "lie_algebra_bundle_so3"
description = "Bundle of so(3) Lie algebras over Pi = dx^dy on R^3 with a non-flat connection; zero anchor makes it hamiltonian with mu = 0 for every connection."
jet_order = 2

[chart]
coordinates = ["x", "y", "z"]

[poisson]
matrix = [["0", "1", "0"], ["-1", "0", "0"], ["0", "0", "0"]]

[sampling]
seed = 42
count = 25

[algebroid]
kind = "lie_algebra_bundle"
frame = ["e1", "e2", "e3"]
structure = [
  [["0", "0", "0"], ["0", "0", "1"], ["0", "-1", "0"]],
  [["0", "0", "-1"], ["0", "0", "0"], ["1", "0", "0"]],
  [["0", "1", "0"], ["-1", "0", "0"], ["0", "0", "0"]],
]

[connection]
kind = "coefficients"
coefficients = [
  [["0", "x", "0"], ["y", "0", "0"], ["0", "0", "z"]],
  [["0", "0", "x*y"], ["0", "0.5", "0"], ["0", "0", "0"]],
  [["0", "0", "0"], ["0", "0", "x"], ["0.25", "0", "0"]],
]

[momentum]
components = ["0", "0", "0"]

[checks]
run = ["jacobi", "algebroid", "H1", "H2", "H3"]
""",
)

_register(
    "r4_nonpoisson",
    """
name = "r4_nonpoisson"
description = "Negative control: Pi = d1^d2 + x1 d3^d4 on R^4 is antisymmetric but fails the Jacobi identity; [Pi,Pi](dx2,dx3,dx4) = -2."
jet_order = 2

[chart]
coordinates = ["x1", "x2", "x3", "x4"]

[poisson]
matrix = [
  ["0", "1", "0", "0"],
  ["-1", "0", "0", "0"],
  ["0", "0", "0", "x1"],
  ["0", "0", "-x1", "0"],
]

[sampling]
seed = 42
count = 25

[checks]
run = ["jacobi"]

[expect]
jacobi = "fail"
""",
)

_register(
    "x_dx_action",
    """
name = "x_dx_action"
description = "Negative control: the R-action generated by x d/dx on the symplectic plane does not preserve Pi (L_{x dx} Pi = -Pi), so the action algebroid with the trivial connection fails Poisson anchoring."
jet_order = 2

[chart]
coordinates = ["x", "y"]

[poisson]
matrix = [["0", "1"], ["-1", "0"]]

[sampling]
seed = 42
count = 25
box = [[-2.0, 2.0], [-2.0, 2.0]]

[algebroid]
kind = "action"
frame = ["e1"]
anchor = [["x", "0"]]
structure = [[[0]]]

[connection]
kind = "trivial"

[momentum]
components = ["0"]

[checks]
run = ["jacobi", "algebroid", "H1"]

[expect]
H1 = "fail"
""",
)

_register(
    "symplectic_suite_r2",
    """
name = "symplectic_suite_r2"
description = "Nondegenerate chart with Pi = q dq^dp on q in [1,2]; the trivial connection is torsion-free and n = -q dq - p dp satisfies D_v n = -v and D_n Pi = -Pi, so every cross-presentation verdict passes."
jet_order = 2

[chart]
coordinates = ["q", "p"]

[poisson]
matrix = [["0", "q"], ["-q", "0"]]

[sampling]
seed = 42
count = 20
box = [[1.0, 2.0], [-1.0, 1.0]]

[connection]
kind = "trivial"

[vector_n]
components = ["-q", "-p"]

[checks]
run = ["jacobi", "symplectic_suite"]
""",
)


def gallery() -> list[str]:
    """Names of the built-in scenarios."""
    return sorted(_SCENARIOS)


def gallery_text(name: str) -> str:
    if name not in _SCENARIOS:
        raise SchemaError(f"unknown gallery scenario {name!r}; available: {', '.join(gallery())}")
    return _SCENARIOS[name]


def gallery_scenario(name: str) -> Scenario:
    return loads_scenario(gallery_text(name), name)
