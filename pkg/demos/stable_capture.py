"""A state near the stable part of Z2 relaxes its field towards -Ae."""
import numpy as np

from mbelab import Pumping, RhsKind, default_params, integrate, sample_tubular
from mbelab.model import lab_to_rotating_arrays


def main():
    params = default_params(p=3e-3, r=2.0)
    P = Pumping(1.0)
    beta = params.beta_r(P.Ae)
    start = sample_tubular(params, P, d=0.05, s=beta / 8, count=1, seed=0)[0]
    t1 = 1.0 / params.p
    grid = np.linspace(0.0, t1, 11)
    tr = integrate(RhsKind.FULL, start.to_array(), (0.0, t1), params, P, t_eval=grid)
    env = lab_to_rotating_arrays(tr.times, tr.states, params)
    print("     t      |M_env + Ae|   S3")
    for t, y in zip(grid, env):
        print(f"{t:8.1f}  {abs(complex(y[0], y[1]) + P.Ae):.3e}  {y[4]:+.4f}")


if __name__ == "__main__":
    main()
