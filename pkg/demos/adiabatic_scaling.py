"""E(p)/sqrt(p) for states on the harmonic branches under quasiperiodic pumping."""
from mbelab import Pumping, default_params, harmonic_z1, harmonic_z2, run_adiabatic_asymptotics
from mbelab.experiments import default_workers

MODES = ((0.3, 2**0.5), (0.2 - 0.1j, (1 + 5**0.5) / 2))


def main():
    params = default_params(p=1e-2, r=2.0)
    P = Pumping(1.0, modes=MODES)
    beta = params.beta_r(P.Ae)
    for label, st in (("Z1(theta=1)", harmonic_z1(params, P, 1.0)), ("Z2(S3=beta/2)", harmonic_z2(params, P, beta / 2))):
        rep = run_adiabatic_asymptotics(params, P, 2.0, [1e-2, 3e-3, 1e-3, 3e-4], st, workers=default_workers())
        print(label)
        for p, e, q in zip(rep.p_values, rep.errors, rep.ratios):
            print(f"  p={p:.0e}  E={e:.3e}  E/sqrt(p)={q:.3e}")
        print(f"  slope {rep.slope:.3f}  passed={rep.passed}")


if __name__ == "__main__":
    main()
