"""Tabulate both branches of harmonic states with their spectra."""
import numpy as np

from mbelab import Pumping, default_params, harmonic_z1, harmonic_z2, spectrum_numeric, spectrum_z2
from mbelab.equilibria import max_nonzero_real_part


def main():
    params = default_params(p=1e-3, r=2.0)
    P = Pumping(1.0)
    print("Z1 circle  theta    M              |S|")
    for th in np.linspace(0, 2 * np.pi, 8, endpoint=False):
        st = harmonic_z1(params, P, th)
        print(f"  {th:6.3f}  {st.Me:.4f}  {np.linalg.norm(st.Se):.4f}")
    beta = params.beta_r(P.Ae)
    print(f"\nZ2 segment  S3 in [-{beta:.6f}, {beta:.6f}]")
    for s3 in np.linspace(-beta, beta, 7):
        cf = spectrum_z2(params, P, s3)
        num = spectrum_numeric(harmonic_z2(params, P, s3), params, P)
        lead = max_nonzero_real_part(cf.eigenvalues)
        print(f"  S3={s3:+.4f}  stable={cf.stable_nonzero_modes!s:5}  max Re(nonzero)={lead:+.4f}  numeric stable={num.stable_nonzero_modes}")


if __name__ == "__main__":
    main()
