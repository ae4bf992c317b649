"""
End-to-end tests of the ctrr command line
"""

import json

import numpy as np
import pandas as pd
import pytest

from src.cli.main import run_command
from src.data import load_dataset
from src.theory import DiscreteJoint

RUN_DOCUMENT = {
    'data': {'blobs': {'classes': 3, 'per_class': 20, 'dim': 5, 'spread': 0.5, 'seed': 1}},
    'noise': {'kind': 'symmetric', 'rate': 0.4, 'seed': 1},
    'arch': {'backbone_widths': [6], 'projection_widths': [5, 5, 4], 'prediction_widths': [3, 4]},
    'train': {'epochs': 2, 'batch_size': 16, 'seed': 3},
    'out_dir': 'run',
}


@pytest.fixture
def run_config(tmp_path):
    path = tmp_path / 'run.json'
    path.write_text(json.dumps(RUN_DOCUMENT))
    return path


def test_gen_data_writes_magic_header(tmp_path, capsys):
    out = tmp_path / 'd.ctrr'
    code = run_command(['gen-data', '--classes', '4', '--dim', '20', '--per-class', '500',
                        '--spread', '0.5', '--seed', '1', '--out', str(out), '--csv', str(tmp_path / 'd.csv')])
    assert code == 0
    assert out.read_bytes()[:4] == b'CTRR'
    assert load_dataset(out).size == 2000
    assert (tmp_path / 'd.csv').read_text().startswith('f0,f1')
    assert str(out) in capsys.readouterr().out


def test_unknown_flag_is_a_usage_error(tmp_path):
    out = tmp_path / 'd.ctrr'
    assert run_command(['gen-data', '--foo', '--out', str(out)]) == 2
    assert not out.exists()


def test_inject_noise_writes_a_new_file(tmp_path):
    clean = tmp_path / 'clean.ctrr'
    noisy = tmp_path / 'noisy.ctrr'
    run_command(['gen-data', '--classes', '4', '--dim', '3', '--per-class', '25', '--spread', '1',
                 '--out', str(clean)])
    before = clean.read_bytes()
    assert run_command(['inject-noise', '--in', str(clean), '--out', str(noisy),
                        '--kind', 'next_class', '--rate', '0.4', '--seed', '1']) == 0
    assert clean.read_bytes() == before
    assert load_dataset(noisy).flipped_count == 40


def test_inject_noise_refuses_to_overwrite_its_input(tmp_path):
    clean = tmp_path / 'clean.ctrr'
    run_command(['gen-data', '--classes', '2', '--dim', '2', '--per-class', '5', '--spread', '1',
                 '--out', str(clean)])
    assert run_command(['inject-noise', '--in', str(clean), '--out', str(clean), '--rate', '0.2']) == 1


def test_train_twice_gives_identical_metrics(run_config, tmp_path):
    assert run_command(['train', '--config', str(run_config)]) == 0
    first = (tmp_path / 'run' / 'metrics.csv').read_bytes()
    assert run_command(['train', '--config', str(run_config)]) == 0
    assert (tmp_path / 'run' / 'metrics.csv').read_bytes() == first


def test_train_with_bad_config_exits_one(tmp_path):
    path = tmp_path / 'bad.json'
    path.write_text(json.dumps({**RUN_DOCUMENT, 'train': {'epochs': 0}}))
    assert run_command(['train', '--config', str(path)]) == 1


def test_linear_head_then_report(run_config, tmp_path):
    assert run_command(['train', '--config', str(run_config)]) == 0
    probe_cfg = tmp_path / 'probe.json'
    probe_cfg.write_text(json.dumps({**RUN_DOCUMENT, 'checkpoint': 'run/params.ckpt', 'out_dir': 'probe',
                                     'probe': {'lambda': 0, 'epochs': 2, 'batch_size': 16, 'seed': 3}}))
    assert run_command(['probe', '--config', str(probe_cfg)]) == 0
    assert (tmp_path / 'probe' / 'probe_metrics.csv').exists()

    summary = tmp_path / 'summary.csv'
    figure = tmp_path / 'curves.png'
    assert run_command(['report', '--metrics', str(tmp_path / 'run' / 'metrics.csv'),
                        str(tmp_path / 'probe' / 'probe_metrics.csv'),
                        '--out', str(summary), '--plot', str(figure)]) == 0
    table = pd.read_csv(summary)
    assert len(table) == 2
    assert {'final_test_accuracy', 'best_test_accuracy', 'final_memorization'} <= set(table.columns)
    assert figure.read_bytes()[:4] == b'\x89PNG'


def test_grad_check_single_sample_is_reproducible(tmp_path):
    first, second = tmp_path / 'a.json', tmp_path / 'b.json'
    assert run_command(['grad-check', '--samples', '1', '--seed', '4', '--out', str(first)]) == 0
    assert run_command(['grad-check', '--samples', '1', '--seed', '4', '--out', str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()

    report = json.loads(first.read_text())
    assert report['passed']
    assert report['max_relative_error'] <= 1e-4
    assert set(report['losses']) == {'ctr', 'ctr_prime', 'ctr_tilde', 'batch', 'objective'}
    assert report['closed_form']['matching_form'] == 'chain'
    assert report['closed_form']['samples'][0]['t'] == pytest.approx(0.0, abs=1e-12)


def test_verify_theory_guard_exits_one(tmp_path):
    out = tmp_path / 'theory.json'
    assert run_command(['verify-theory', '--classes', '3', '--background', '3', '--out', str(out)]) == 1
    assert not out.exists()


def test_verify_theory_single_family_member(tmp_path):
    out = tmp_path / 'theory.json'
    assert run_command(['verify-theory', '--classes', '2', '--background', '2', '--eta', '0',
                        '--rho', '1.0', '--out', str(out)]) == 0
    report = json.loads(out.read_text())
    assert report['instance_count'] == 1
    assert report['passed']
    assert report['lemma1_tight']['tight']


def test_verify_theory_marks_two_label_bound_vacuous(tmp_path):
    p_xy = np.array([[0.5, 0.0], [0.0, 0.25], [0.0, 0.25]])
    joint = DiscreteJoint.from_channel(p_xy, np.array([[0.8, 0.2], [0.1, 0.9]]))
    source = tmp_path / 'joint.json'
    source.write_text(json.dumps(joint.to_dict()))
    out = tmp_path / 'theory.json'
    assert run_command(['verify-theory', '--joint', str(source), '--out', str(out)]) == 0
    assert json.loads(out.read_text())['lemma1']['vacuous'] is True
