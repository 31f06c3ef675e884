import pytest

from rdch import config as cfgmod
from rdch import harness


def spinodal_config(**kv):
    """The canonical spinodal configuration used by several acceptance tests:
    L=1, N=256, gamma=1e-3, sigma=0.1*gamma, eps=1e-2, m=0.5 with a 1% cosine
    perturbation (nstar=0.7 puts the mean squarely in the unstable range)."""
    base = {
        "grid.L": "1.0",
        "grid.N": "256",
        "potential.nstar": "0.7",
        "potential.k": "1.0",
        "params.gamma": "1e-3",
        "params.sigma": "1e-4",
        "params.eps": "1e-2",
        "init.kind": "cosine",
        "init.m": "0.5",
        "init.a": "0.01",
        "init.j": "1",
        "run.t_end": "1.0",
        "steady.enabled": "false",
        "output.diagnostics_stride": "1",
    }
    base.update({k: str(v) for k, v in kv.items()})
    return cfgmod.from_mapping(base, apply_env=False)


@pytest.fixture(scope="session")
def spinodal_run():
    """One shared trajectory for the mass/energy/entropy acceptance criteria."""
    return harness.run(spinodal_config(), write_outputs=False)
