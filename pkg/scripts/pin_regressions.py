"""Recompute the frozen regression values with routes independent of the matrix exponential.

- second-moment deviation: RK4 on the covariance equations
- extreme transfer / decoupling: normal-mode trajectory matrices
- ensemble divergence: RK4 at dt = 1e-4
"""

import numpy as np

from hybridcq.core import MomentState, propagate_numeric, flow_matrix
from hybridcq.ensemble import default_divergence
from hybridcq.sudarshan import HYBRID_VARS, OBSERVABLES, HybridSpec, build_hybrid, build_qq_reference, novelty_initial_states
from hybridcq.wigner import OscPairConfig, initial_state, normal_mode_propagators, time_grid


def novelty_rk4(spec=HybridSpec(3.0, 2.0, 1.0), t_max=10.0, step=0.01, dt=1e-3):
    cq, qq = novelty_initial_states(spec)
    A = flow_matrix(*build_hybrid(spec))
    Aqq = flow_matrix(*build_qq_reference(spec))
    obs = HYBRID_VARS.indices(OBSERVABLES)
    worst = 0.0
    for _ in range(int(round(t_max / step))):
        cq = propagate_numeric(A, cq, step, dt)
        qq = propagate_numeric(Aqq, qq, step, dt)
        worst = max(worst, float(np.max(np.abs(cq.cov[np.ix_(obs, obs)] - qq.cov))))
    return worst


def dispersions_modes(cfg, t_max, dt):
    t = time_grid(t_max, dt)
    U = normal_mode_propagators(cfg, t)
    C = np.einsum("tij,jk,tlk->til", U, initial_state(cfg).cov, U)
    d = np.sqrt(np.clip(np.diagonal(C, axis1=1, axis2=2), 0, None))
    return d[:, 0] * d[:, 1], d[:, 2] * d[:, 3]


if __name__ == "__main__":
    print("novelty max deviation (RK4):", repr(novelty_rk4()))
    dqdp, dxdk = dispersions_modes(OscPairConfig(1.0, 1.01, 1.0), 200.0, 0.01)
    print("extreme min dxdk:", repr(dxdk.min()), "max dqdp:", repr(dqdp.max()))
    dqdp, _ = dispersions_modes(OscPairConfig(3.0, 2.0, 0.01), 40.0, 0.01)
    print("decoupled dqdp amplitude:", repr(dqdp.max() - dqdp.min()))
    print("divergence max (dt=1e-4):", repr(default_divergence(dt=1e-4).trace_distance.max()))
