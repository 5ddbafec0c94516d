"""
End-to-end surrogate runs of the sample -> rank -> tune workflow.

These take minutes and are deselected by default; run them with
``pytest -m acceptance``.
"""
import tempfile
import unittest
from dataclasses import replace
from pathlib import Path

import pytest

from knob_tuner.cli import main
from knob_tuner.common.seeds import derive_seed
from knob_tuner.config.config import Config
from knob_tuner.model.ranking import rank, top_k
from knob_tuner.space.sampling import sample
from knob_tuner.targets.surrogate import SurrogateTarget, load_surrogate
from knob_tuner.tuning.optimizer import TuneObjective, load_tune_report, tune

TEST_DATA = Path(__file__).resolve().parents[1] / "test_data"
ACCEPTANCE = TEST_DATA / "surrogates" / "acceptance.json"
OUTSIDE = TEST_DATA / "surrogates" / "outside_optimum.json"


def sampled_records(space, target, n, seed):
    return [
        target.evaluate(space.full_configuration(config), "default", derive_seed(seed, index))
        for index, config in enumerate(sample(space, n, seed))
    ]


def default_metric(spec, space):
    return spec.noiseless(space.full_configuration(space.defaults()))


@pytest.mark.acceptance
class TestAcceptance(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.target = load_surrogate(ACCEPTANCE)
        cls.spec = cls.target.spec
        cls.space = cls.target.space()

    def setUp(self):
        Config.get_instance().GP_RESTARTS = 3

    def ranked_names(self, k, seed=0):
        records = sampled_records(self.space, self.target, 300, seed)
        return top_k(rank(records, self.space), k)

    def test_tuning_doubles_the_default(self):
        baseline = default_metric(self.spec, self.space)
        with tempfile.TemporaryDirectory() as folder:
            db = str(Path(folder) / "evals.jsonl")
            ranking = str(Path(folder) / "ranking.json")
            self.assertEqual(main(["sample", "--surrogate", str(ACCEPTANCE), "--n", "300", "--db", db]), 0)
            self.assertEqual(main(["rank", "--surrogate", str(ACCEPTANCE), "--db", db, "--out", ranking]), 0)
            wins = 0
            for seed in range(10):
                out = str(Path(folder) / f"tune-{seed}.json")
                code = main(["tune", "--surrogate", str(ACCEPTANCE), "--ranking", ranking, "--k", "16",
                             "--budget", "120", "--seed", str(seed), "--out", out])
                self.assertEqual(code, 0)
                report = load_tune_report(out)
                self.assertEqual(len(report.top_k_names), 16)
                if self.spec.noiseless(report.best_config) >= 2.0 * baseline:
                    wins += 1
        self.assertGreaterEqual(wins, 9)

    def test_ranking_recovers_influential_parameters(self):
        influential = set(self.spec.influential_names)
        recovered = 0
        for seed in range(10):
            found = len(influential & set(self.ranked_names(16, seed)))
            if found >= 0.8 * len(influential):
                recovered += 1
        self.assertGreaterEqual(recovered, 9)

    def test_top_16_matches_top_64_with_half_the_evaluations(self):
        # the top-64 run needs 128 seed evaluations before its GP takes over
        large_budget = 256
        ordered = self.ranked_names(64)
        successes = 0
        for seed in range(5):
            small = tune(self.space, TuneObjective(), self.target, large_budget // 2, ordered[:16], seed)
            large = tune(self.space, TuneObjective(), self.target, large_budget, ordered, seed)
            self.assertEqual(large.n_init, 128)
            if small.best_metric >= 0.98 * large.best_metric:
                successes += 1
        self.assertGreaterEqual(successes, 4)

    def test_noise_does_not_mislead_the_incumbent(self):
        names = self.ranked_names(16)
        noiseless = SurrogateTarget(replace(self.spec, noise_rel=0.0))
        for seed in range(10):
            noisy_run = tune(self.space, TuneObjective(), self.target, 120, names, seed)
            clean_run = tune(self.space, TuneObjective(), noiseless, 120, names, seed)
            ratio = self.spec.noiseless(noisy_run.best_config) / clean_run.best_metric
            self.assertGreaterEqual(ratio, 0.9, msg=f"seed {seed}")


@pytest.mark.acceptance
class TestDynamicBoundaryAcceptance(unittest.TestCase):

    def setUp(self):
        Config.get_instance().GP_RESTARTS = 3

    def test_dynamic_ranges_reach_an_optimum_outside_the_seed_ranges(self):
        target = load_surrogate(OUTSIDE)
        space = target.space()
        wins = 0
        for seed in range(5):
            dynamic = tune(space, TuneObjective(), target, 80, seed=seed, dynamic_bounds=True)
            static = tune(space, TuneObjective(), target, 80, seed=seed, dynamic_bounds=False)
            self.assertGreater(len(dynamic.bounds_log), 0)
            self.assertEqual(static.bounds_log, ())
            if dynamic.best_metric > static.best_metric:
                wins += 1
        self.assertGreaterEqual(wins, 4)


if __name__ == '__main__':
    unittest.main()
