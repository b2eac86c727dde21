"""Shared fixtures; the expensive simulation runs are session-scoped so the
acceptance criteria and module tests reuse them."""

import math

import numpy as np
import pytest

from granflow import RHEOLOGY_PRESETS
from granflow.scenarios import (
    CollapseSpec,
    UniformFlowSpec,
    run_collapse,
    run_uniform_flow,
    EXPERIMENT_BED_THICKNESS,
)
from granflow.solver import FrictionMode


@pytest.fixture(scope="session")
def bagnold_params():
    return RHEOLOGY_PRESETS["analytic-bagnold"]


@pytest.fixture(scope="session")
def experiment_params():
    return RHEOLOGY_PRESETS["experiments-2010"]


@pytest.fixture(scope="session")
def bagnold_spec(bagnold_params):
    return UniformFlowSpec(H=1.0, theta=0.43, rheology=bagnold_params)


@pytest.fixture(scope="session")
def steady_runs(bagnold_spec):
    """Converged steady uniform-flow runs for the layer-count sweep."""
    return {n: run_uniform_flow(bagnold_spec, n) for n in (5, 10, 20, 50)}


@pytest.fixture(scope="session")
def collapse_mu_i_22(experiment_params):
    """mu(I) multilayer N=20 collapses at 22 deg over the three beds."""
    out = {}
    for h_i in EXPERIMENT_BED_THICKNESS[22.0]:
        spec = CollapseSpec(h_i=h_i, theta=math.radians(22.0))
        out[h_i] = run_collapse(spec, experiment_params, n_layers=20, t_end=3.0)
    return out


@pytest.fixture(scope="session")
def collapse_mu_s(experiment_params):
    """Constant-friction N=20 collapses at 16/19/22 deg over the beds."""
    out = {}
    for deg in (16.0, 19.0, 22.0):
        x_max = 3.25 if deg >= 22.0 else 1.5
        for h_i in EXPERIMENT_BED_THICKNESS[deg]:
            spec = CollapseSpec(h_i=h_i, theta=math.radians(deg), x_max=x_max)
            out[(deg, h_i)] = run_collapse(
                spec, experiment_params, n_layers=20, t_end=4.0,
                friction_mode=FrictionMode.CONSTANT)
    return out


@pytest.fixture(scope="session")
def collapse_monolayer_19(experiment_params):
    """mu(I) monolayer collapses at 19 deg over the three beds."""
    out = {}
    for h_i in EXPERIMENT_BED_THICKNESS[19.0]:
        spec = CollapseSpec(h_i=h_i, theta=math.radians(19.0))
        out[h_i] = run_collapse(spec, experiment_params, n_layers=1, t_end=3.0)
    return out


@pytest.fixture(scope="session")
def collapse_flat(experiment_params):
    """Flat-bottom (horizontal) collapse on a dry plane for the energy check."""
    spec = CollapseSpec(h_i=0.0, theta=0.0, x_min=-0.75, x_max=0.75)
    return run_collapse(spec, experiment_params, n_layers=20, t_end=3.0)
