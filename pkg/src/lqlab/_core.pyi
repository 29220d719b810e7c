"""Type stubs for the compiled kernel extension (mirror of lqlab._pure)."""

import numpy as np
from numpy.typing import NDArray

def vi_run(
    v: NDArray[np.float64],
    x: NDArray[np.float64],
    dx: float,
    drift: float,
    gain: float,
    q_cost: float,
    r_cost: float,
    r_coef: float,
    inv_gs: float,
    u_min: float,
    u_max: float,
    mode: int,
    theta: float,
    div_threshold: float,
    max_steps: int,
    res_out: NDArray[np.float64],
    vmax_out: NDArray[np.float64],
) -> tuple[int, int]: ...

def pe_run(
    v: NDArray[np.float64],
    u: NDArray[np.float64],
    x: NDArray[np.float64],
    dx: float,
    drift: float,
    gain: float,
    q_cost: float,
    r_cost: float,
    r_coef: float,
    inv_gs: float,
    mode: int,
    theta: float,
    div_threshold: float,
    max_steps: int,
    res_out: NDArray[np.float64],
    vmax_out: NDArray[np.float64],
) -> tuple[int, int]: ...

def q_episode(
    q: NDArray[np.float64],
    visits: NDArray[np.int64],
    next_idx: NDArray[np.int64],
    cost: NDArray[np.float64],
    u_abs: NDArray[np.float64],
    gamma_d: float,
    lr_mode: int,
    lr_value: float,
    epsilon: float,
    n_steps: int,
    div_threshold: float,
    rng_state: int,
) -> tuple[int, int, int]: ...

def fa_run(
    w: NDArray[np.float64],
    n_steps: int,
    dt: float,
    drift: float,
    gain: float,
    q_cost: float,
    r_cost: float,
    gamma_d: float,
    x_min: float,
    x_max: float,
    u_min: float,
    u_max: float,
    lr_mode: int,
    lr_param: float,
    div_threshold: float,
    rng_state: int,
) -> tuple[int, int, int]: ...
