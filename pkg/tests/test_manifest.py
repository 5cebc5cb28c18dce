import json
import textwrap

import numpy as np
import pytest

from lightlike.degenerate import validate_bundle
from lightlike.manifest import ManifestError, catalog_names, load_manifest, resolve_manifest

FLAT = """\
name: scratch
dimension: 3
nullity: 1
domain: [[-1, 1], [-1, 1], [-1, 1]]
metric:
  - ["0", "0", "0"]
  - ["0", "1", "0"]
  - ["0", "0", "1"]
radical_frame:
  - ["1", "0", "0"]
coframe:
  - ["1", "0", "0"]
"""


def write(tmp_path, text, name="m.manifest"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text))
    return path


def test_catalog_contents():
    assert catalog_names() == ["flat3", "flat4r2", "nonkilling", "nonmetric", "ppwavelike",
                               "torsionful"]


def test_load_flat3():
    m = load_manifest("flat3")
    assert (m.dimension, m.nullity, m.index) == (3, 1, 0)
    assert np.array_equal(m.metric.components([0.2, 0.1, 0.0]), np.diag([0.0, 1.0, 1.0]))
    assert m.torsion is None and m.nonmetricity is None and m.connection() is None


def test_catalog_name_with_suffix():
    assert resolve_manifest("flat3.manifest").name == "flat3.manifest"


@pytest.mark.parametrize("name", ["flat3", "flat4r2", "nonkilling", "nonmetric", "ppwavelike",
                                  "torsionful"])
def test_catalog_bundles_are_valid(name):
    m = load_manifest(name)
    assert all(r.passed for r in validate_bundle(m.bundle(), m.config(samples=30)))


def test_sparse_and_dense_rank3_agree(tmp_path):
    sparse = write(tmp_path, FLAT + 'torsion:\n  "0,1,2": "x0"\n  "0,2,1": "-x0"\n', "a.manifest")
    dense_blocks = [[["0"] * 3 for _ in range(3)] for _ in range(3)]
    dense_blocks[0][1][2] = "x0"
    dense_blocks[0][2][1] = "-x0"
    dense = write(tmp_path, FLAT + f"torsion: {json.dumps(dense_blocks)}\n", "b.manifest")
    p = [0.3, 0.1, -0.2]
    assert np.array_equal(load_manifest(sparse).torsion.components(p),
                          load_manifest(dense).torsion.components(p))


def test_parameters_are_bound():
    m = load_manifest("nonmetric")
    assert m.parameters == {"q": 0.5}
    assert m.metric.components([1.0, 0.0, 0.0])[1, 1] == 1.5
    assert m.nonmetricity.components([0.0, 0.0, 0.0])[0, 1, 1] == 0.5


def test_digest_tracks_bytes(tmp_path):
    a = load_manifest(write(tmp_path, FLAT, "a.manifest"))
    b = load_manifest(write(tmp_path, FLAT + "\n", "b.manifest"))
    assert a.digest != b.digest and len(a.digest) == 64
    assert load_manifest(write(tmp_path, FLAT, "c.manifest")).digest == a.digest


def test_verification_overrides(tmp_path):
    m = load_manifest(write(tmp_path, FLAT + "verification: {samples: 17, seed: 5}\n"))
    assert (m.config().sample_count, m.config().seed) == (17, 5)
    cfg = m.config(samples=3, seed=9, tol_analytic=1e-7)
    assert (cfg.sample_count, cfg.seed, cfg.tolerances.analytic) == (3, 9, 1e-7)


def test_asymmetric_metric_rejected(tmp_path):
    text = FLAT.replace('["0", "1", "0"]', '["0", "1", "x0"]')
    with pytest.raises(ManifestError, match="symmetry") as info:
        load_manifest(write(tmp_path, text))
    assert info.value.field == "metric"


def test_symbolically_different_but_equal_entries_accepted(tmp_path):
    text = FLAT.replace('["0", "1", "0"]', '["0", "1", "x0*x1"]').replace(
        '["0", "0", "1"]', '["0", "x1*x0", "1"]')
    load_manifest(write(tmp_path, text))


def test_coordinate_out_of_range(tmp_path):
    text = FLAT.replace('["0", "1", "0"]', '["0", "1 + x5", "0"]')
    with pytest.raises(ManifestError, match="out of range") as info:
        load_manifest(write(tmp_path, text))
    assert info.value.line == 7
    assert info.value.field == "metric[1][1]"


def test_bad_expression_reports_line(tmp_path):
    text = FLAT.replace('["1", "0", "0"]\ncoframe', '["1", "0", "sin x0"]\ncoframe')
    with pytest.raises(ManifestError) as info:
        load_manifest(write(tmp_path, text))
    assert info.value.line == 10


def test_yaml_syntax_error(tmp_path):
    with pytest.raises(ManifestError, match="YAML") as info:
        load_manifest(write(tmp_path, FLAT + "metric: [\n"))
    assert info.value.line is not None


def test_schema_violations(tmp_path):
    with pytest.raises(ManifestError, match="dimension"):
        load_manifest(write(tmp_path, FLAT.replace("dimension: 3\n", "")))
    with pytest.raises(ManifestError):
        load_manifest(write(tmp_path, FLAT + "colour: blue\n"))
    with pytest.raises(ManifestError):
        load_manifest(write(tmp_path, FLAT.replace("dimension: 3", "dimension: 9")))


def test_shape_errors(tmp_path):
    with pytest.raises(ManifestError, match="rows"):
        load_manifest(write(tmp_path, FLAT.replace("nullity: 1", "nullity: 2")))
    with pytest.raises(ManifestError, match="entries"):
        load_manifest(write(tmp_path, FLAT.replace('["1", "0", "0"]\ncoframe', '["1", "0"]\ncoframe')))
    with pytest.raises(ManifestError, match="intervals"):
        load_manifest(write(tmp_path, FLAT.replace("[[-1, 1], [-1, 1], [-1, 1]]", "[[-1, 1]]")))
    with pytest.raises(ManifestError, match="out of range"):
        load_manifest(write(tmp_path, FLAT + 'torsion:\n  "0,1,3": "1"\n'))


def test_torsion_antisymmetry_checked(tmp_path):
    with pytest.raises(ManifestError, match="antisymmetry"):
        load_manifest(write(tmp_path, FLAT + 'torsion:\n  "0,1,2": "1"\n'))


def test_nonmetricity_symmetry_checked(tmp_path):
    with pytest.raises(ManifestError, match="symmetry"):
        load_manifest(write(tmp_path, FLAT + 'nonmetricity:\n  "0,1,2": "1"\n'))


def test_missing_file():
    with pytest.raises(ManifestError, match="no such manifest"):
        load_manifest("does/not/exist.manifest")


def test_connection_section(tmp_path):
    m = load_manifest(write(tmp_path, FLAT + 'connection:\n  "1,1,1": "x1"\n'))
    conn = m.connection()
    assert conn.provenance == "user"
    assert conn([0.0, 0.5, 0.0])[1, 1, 1] == 0.5
