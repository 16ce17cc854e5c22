import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from quadconcord._rng import generator
from quadconcord.io import Dataset, Record, write_dataset

# Cheap pure-function properties run at 1000 examples; numerically heavy
# properties use explicit seeded loops with their own documented counts.
settings.register_profile(
    "bulk",
    max_examples=1000,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)
settings.load_profile("bulk")


def synthetic_bp_records(seed: int = 20260809, n_subjects: int = 85):
    """Blood-pressure-like fixture: two near-identical observers (J, R) and a
    noisy automatic device (S), three time points each."""
    gen = generator(seed)
    records = []
    for i in range(n_subjects):
        base = gen.normal(130.0, 15.0)
        traj = np.cumsum(gen.normal(0.0, 9.0, size=3))
        j = base + traj + gen.normal(0.0, 1.5, size=3)
        r = base + traj + gen.normal(0.0, 1.5, size=3)
        s = base + 0.35 * traj + gen.normal(0.0, 9.0, size=3)
        subject = f"subj{i:03d}"
        for t in range(3):
            records.append(Record(subject=subject, method="J", time=t + 1, value=float(j[t])))
            records.append(Record(subject=subject, method="R", time=t + 1, value=float(r[t])))
            records.append(Record(subject=subject, method="S", time=t + 1, value=float(s[t])))
    return records


@pytest.fixture(scope="session")
def bp_dataset():
    return Dataset(synthetic_bp_records())


@pytest.fixture(scope="session")
def bp_csv(tmp_path_factory, bp_dataset):
    path = tmp_path_factory.mktemp("data") / "bp.csv"
    write_dataset(bp_dataset, path, format="long")
    return path


def random_pd_model(gen, dim=4, mean_scale=1.5):
    """Random well-conditioned Gaussian model for property tests."""
    from quadconcord.model import GaussianModel

    A = gen.normal(size=(dim, dim))
    cov = A @ A.T + dim * np.eye(dim) * 0.5
    d = np.sqrt(np.diag(cov))
    cov = cov / np.outer(d, d)  # unit variances keep scales comparable
    mean = gen.normal(0.0, mean_scale, size=dim)
    return GaussianModel(mean=mean, cov=cov)
