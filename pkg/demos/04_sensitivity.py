"""
Sensitivity to contact probabilities
====================================

Enumerate every sequence of n contacts drawn from a few probability
levels, then summarize how spread out the resulting risks are.
"""

from hcprisk.sensitivity import enumerate_sequence_risks, response_surface

for n in (2, 3):
    e = enumerate_sequence_risks([0.01, 0.05, 0.1], n)
    print(f"n={n}: {e.risks.size} sequences, mean={e.mean:.4f}, sd={e.sd():.4f}")
    for code, risk in list(e.rows())[:4]:
        print("   ", code, round(risk, 4))

# %%
# Two levels, p_low and p_low + 0.3.  The mean rises with both p_low and
# n; the variance peaks in the middle and fades once risk saturates.

points = response_surface([0.05, 0.1, 0.2, 0.3, 0.4, 0.5], [1, 2, 3, 4, 6, 8])
print("p_low   n   mean     variance")
for pt in points:
    print(f"{pt.p_low:5.2f} {pt.n_contacts:3d}  {pt.mean:.4f}  {pt.variance:.6f}")
