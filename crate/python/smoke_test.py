"""Smoke test for the mhrecon Python extension.

Build and install first:  pip install -e crates/python --no-build-isolation
"""

import math
import tempfile
from pathlib import Path

import mhrecon


def main():
    mesh = mhrecon.Mesh.sphere(1)
    assert mesh.num_vertices == 42 and mesh.num_faces == 80
    mesh.check_geometry()

    basis = mhrecon.HarmonicBasis(mhrecon.Mesh.icosphere(2), 10)
    ev = basis.eigenvalues
    assert abs(ev[0]) < 1e-8 and all(abs(v - 2.0) / 2.0 < 0.05 for v in ev[1:4]), ev
    coeffs = basis.forward()
    assert len(coeffs) == 10
    assert mhrecon.surface_area_error(basis.compress(10), basis.compress(10)) == 0.0

    field = mhrecon.simulate(mesh, [2.0], [[0.0, 0.0, 1.0]], observations=26)
    assert field.shape == (1, 1, 26)
    oracle = mhrecon.sphere_far_field(1.0, 2.0, [0.0, 0.0, 1.0], field.observations)
    err = math.sqrt(sum(abs(a - b) ** 2 for a, b in zip(field.values, oracle)))
    ref = math.sqrt(sum(abs(b) ** 2 for b in oracle))
    assert err / ref < 0.05, err / ref

    noisy = field.with_noise(20.0, seed=3)
    diff = math.sqrt(sum(abs(a - b) ** 2 for a, b in zip(noisy.values, field.values)))
    assert abs(diff / field.norm() - 0.1) < 1e-12
    again = mhrecon.FarField.from_text(field.to_text())
    assert again.values == field.values

    with tempfile.TemporaryDirectory() as tmp:
        path = str(Path(tmp) / "mesh.obj")
        mesh.save(path)
        assert mhrecon.Mesh.load(path).vertices() == mesh.vertices()

    try:
        mhrecon.Mesh([[0.0, 0.0, 0.0]], [[0, 1, 2]])
    except ValueError as e:
        assert "IndexOutOfRange" in str(e) or "TooFewVertices" in str(e), e
    else:
        raise AssertionError("invalid mesh accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
