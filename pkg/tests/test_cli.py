"""Command-line dispatch, output envelopes, report round-trips, SVG."""

import json

import pytest

from pspin_glauber import (
    BottleneckReport,
    MixingReport,
    ModelParams,
    PhaseReport,
    SamplerReport,
    bottleneck,
    classify_point,
    mixing_time,
)
from pspin_glauber.cli import main, real
from pspin_glauber.svg import emit_svg


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_real_parsing():
    assert real("0.25") == 0.25
    assert real("1/3") == 1.0 / 3.0
    assert real(" 2/8 ") == 0.25


def test_classify_json(capsys):
    code, out, _ = run_cli(["classify", "--p", "4", "--beta", "0.51",
                            "--h", "0.184"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["schema_version"] == "1"
    assert doc["payload"]["region"] == "LocallyCritical"
    assert len(doc["payload"]["stationary_points"]) == 3


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["classify", "--p", "1", "--beta", "0.5", "--h", "0"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["classify", "--p", "4", "--beta", "0.5", "--h", "0",
              "--unknown-flag"])
    assert exc.value.code == 2


def test_domain_error_exit_code(capsys):
    # field too large for the root-finding domain: a semantic failure
    code, _, err = run_cli(["classify", "--p", "4", "--beta", "0.5",
                            "--h", "25"], capsys)
    assert code == 1
    assert "error" in err


def test_mix_json_reference_parameters(capsys):
    code, out, _ = run_cli(["mix", "--p", "4", "--beta", "0.333333",
                            "--h", "0.41", "--n", "200", "--eps", "0.35",
                            "--cap", "10000", "--method", "exact"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert isinstance(doc["payload"]["t_mix"], int)


def test_cli_determinism(capsys):
    args = ["mix", "--p", "4", "--beta", "0.4", "--h", "0.1", "--n", "80",
            "--eps", "0.3", "--cap", "5000", "--method", "mc", "--seed", "9"]
    _, out1, _ = run_cli(args, capsys)
    _, out2, _ = run_cli(args, capsys)
    assert out1 == out2
    _, out3, _ = run_cli(["drift", "--p", "3", "--beta", "0.7", "--h", "0.2",
                          "--n", "50"], capsys)
    _, out4, _ = run_cli(["drift", "--p", "3", "--beta", "0.7", "--h", "0.2",
                          "--n", "50"], capsys)
    assert out3 == out4


def test_csv_headers(capsys, tmp_path):
    code, out, _ = run_cli(["curves", "--p", "4", "--beta-min", "0.4",
                            "--beta-max", "0.5", "--beta-step", "0.05"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "# schema_version=1"
    assert lines[1] == "beta,U,L,C"

    code, out, _ = run_cli(["mix-sweep", "--p", "4", "--beta", "0.054",
                            "--h", "0.5", "--n-list", "40,60", "--eps", "0.35",
                            "--cap", "10000"], capsys)
    assert out.splitlines()[1] == "N,t_mix,capped,method"

    code, out, _ = run_cli(["coupling", "--p", "3", "--beta", "0.3", "--h", "0.0",
                            "--n", "20", "--steps", "50",
                            "--record-every", "10"], capsys)
    assert out.splitlines()[1] == "t,mag_sum,hamming,untouched"

    code, out, _ = run_cli(["drift", "--p", "3", "--beta", "0.3", "--h", "0.0",
                            "--n", "20", "--c-grid", "5"], capsys)
    assert out.splitlines()[1] == "c,drift"


def test_phase_diagram_files(tmp_path, capsys):
    prefix = str(tmp_path / "diagram")
    code, _, _ = run_cli(["phase-diagram", "--p", "4", "--beta-min", "0.3",
                          "--beta-max", "0.6", "--beta-step", "0.1",
                          "--h-min", "-0.3", "--h-max", "0.3",
                          "--h-step", "0.1", "--out-prefix", prefix], capsys)
    assert code == 0
    grid_text = open(prefix + ".grid.csv").read()
    curve_text = open(prefix + ".curves.csv").read()
    assert grid_text.splitlines()[1] == "beta,h,region_code"
    assert curve_text.splitlines()[1] == "beta,U,L,C"

    # a worker pool must produce the identical artifact
    prefix2 = str(tmp_path / "diagram2")
    code, _, _ = run_cli(["phase-diagram", "--p", "4", "--beta-min", "0.3",
                          "--beta-max", "0.6", "--beta-step", "0.1",
                          "--h-min", "-0.3", "--h-max", "0.3",
                          "--h-step", "0.1", "--jobs", "2",
                          "--out-prefix", prefix2], capsys)
    assert code == 0
    assert open(prefix2 + ".grid.csv").read() == grid_text
    assert open(prefix2 + ".curves.csv").read() == curve_text


def test_sample_and_bottleneck_json(capsys):
    code, out, _ = run_cli(["sample", "--p", "4", "--beta", "0.9", "--h", "0",
                            "--n", "60", "--burn", "1000", "--seed", "3"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["payload"]["weights"] == [0.5, 0.5]

    code, out, _ = run_cli(["bottleneck", "--p", "4", "--beta", "0.51",
                            "--h", "0.184", "--n", "40"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["payload"]["phi_star"] > 0


def test_report_round_trips(capsys):
    phase = classify_point(4, 0.51, 0.184)
    assert PhaseReport.from_dict(json.loads(json.dumps(phase.to_dict()))) == phase

    mix = mixing_time(ModelParams(4, 0.054, 0.5), 60, 0.35, cap=5000)
    assert MixingReport.from_dict(json.loads(json.dumps(mix.to_dict()))) == mix

    bn = bottleneck(ModelParams(4, 0.51, 0.184), 30)
    assert BottleneckReport.from_dict(json.loads(json.dumps(bn.to_dict()))) == bn

    from pspin_glauber import MetastableSpec, metastable_sample

    _, rep = metastable_sample(MetastableSpec(params=ModelParams(4, 0.9, 0.0),
                                              N=40, burn_steps=500, seed=1))
    back = SamplerReport.from_dict(json.loads(json.dumps(rep.to_dict())))
    assert back == rep


def test_svg_output():
    series = [("measured", [(80, 300.0), (160, 700.0), (320, 1600.0)]),
              ("reference", [(80, 350.0), (160, 760.0), (320, 1640.0)])]
    doc = emit_svg(series, log_x=True, log_y=True, x_label="N", y_label="t")
    assert doc.count("<polyline") == 2
    assert doc == emit_svg(series, log_x=True, log_y=True, x_label="N",
                           y_label="t")
    single = emit_svg([("point", [(1.0, 2.0)])])
    assert single.count("<polyline") == 1
    with pytest.raises(ValueError):
        emit_svg([])
    with pytest.raises(ValueError):
        emit_svg([("bad", [(1.0, float("nan"))])])
    with pytest.raises(ValueError):
        emit_svg([("bad", [(0.0, 1.0)])], log_x=True)


def test_mix_sweep_svg_with_reference(capsys):
    code, out, _ = run_cli(["mix-sweep", "--p", "4", "--beta", "0.054",
                            "--h", "0.5", "--n-list", "60,120", "--eps", "0.35",
                            "--cap", "100000", "--svg", "--reference", "nlogn"],
                           capsys)
    assert code == 0
    assert out.count("<polyline") == 2
    assert "10 N log N" in out


def test_curves_svg(capsys):
    code, out, _ = run_cli(["curves", "--p", "4", "--beta-min", "0.4",
                            "--beta-max", "0.5", "--beta-step", "0.05",
                            "--svg"], capsys)
    assert code == 0
    assert out.startswith("<?xml")
    assert "<polyline" in out
