#!/usr/bin/env python3
"""Regenerate the synthetic MSOA fixture under fixtures/msoa/.

All numbers are synthetic. Counts are integerised with largest-remainder
rounding so every person table sums to exactly the same total.
"""
import csv
import os

OUT = os.path.join(os.path.dirname(__file__), "..", "fixtures", "msoa")
TOTAL = 7000

SEX = ["m", "f"]
AGE = ["0-4", "5-9", "10-15", "16-17", "18-24", "25-34", "35-49", "50-64", "65-74", "75-84", "85+"]
AGE_SHARE = [0.060, 0.055, 0.065, 0.020, 0.140, 0.160, 0.190, 0.150, 0.085, 0.055, 0.020]
CHILD = AGE[:4]
ADULT = AGE[4:8]
ELDER = AGE[8:]
ETH = ["W1", "W2", "W3", "W4", "M1", "M2", "M3", "M4", "A1", "A2", "A3", "A4", "A5", "B1", "B2", "B3", "O1", "O2"]
ETH_SHARE = [0.62, 0.01, 0.002, 0.078, 0.008, 0.006, 0.009, 0.008, 0.035, 0.045, 0.012, 0.03, 0.04, 0.03, 0.015, 0.004, 0.01, 0.038]
REL = ["C", "B", "H", "J", "M", "S", "O", "N", "NS"]
REL_SHARE = [0.45, 0.012, 0.018, 0.008, 0.06, 0.004, 0.008, 0.36, 0.08]
QUAL = ["na", "none", "l1", "l2", "app", "l3", "l4", "oth"]
MAR = ["single", "married", "divorced", "widowed"]


def split(total, shares):
    s = sum(shares)
    raw = [total * x / s for x in shares]
    base = [int(r) for r in raw]
    rem = total - sum(base)
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - base[i]), i))
    for i in order[:rem]:
        base[i] += 1
    return base


def qual_share(age):
    if age in ("0-4", "5-9", "10-15"):
        return [1, 0, 0, 0, 0, 0, 0, 0]
    if age == "16-17":
        return [0, 0.1, 0.5, 0.35, 0.0, 0.05, 0, 0]
    if age in ELDER:
        return [0, 0.35, 0.12, 0.12, 0.05, 0.08, 0.22, 0.06]
    return [0, 0.12, 0.11, 0.14, 0.03, 0.14, 0.42, 0.04]


def mar_share(age):
    if age in CHILD:
        return [1, 0, 0, 0]
    if age == "18-24":
        return [0.93, 0.06, 0.01, 0]
    if age in ("25-34",):
        return [0.55, 0.4, 0.05, 0]
    if age in ("35-49", "50-64"):
        return [0.22, 0.6, 0.15, 0.03]
    return [0.06, 0.55, 0.1, 0.29]


def eth_shift(age):
    # younger cohorts are more diverse
    k = 1.0 if age in ELDER else (1.4 if age in CHILD else 1.2)
    return [ETH_SHARE[0] / k] + ETH_SHARE[1:]


def write(name, header, rows):
    with open(os.path.join(OUT, name), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            if r[-1] > 0:
                w.writerow(r)


def main():
    os.makedirs(os.path.join(OUT, "tables"), exist_ok=True)
    age_counts = split(TOTAL, AGE_SHARE)
    sex_age = {}
    for a, n in zip(AGE, age_counts):
        fem = 0.5 if a not in ELDER else 0.56
        m, f = split(n, [1 - fem, fem])
        sex_age[("m", a)] = m
        sex_age[("f", a)] = f

    def trivariate(cats, share_fn):
        rows = []
        for s in SEX:
            for a in AGE:
                for c, n in zip(cats, split(sex_age[(s, a)], share_fn(a))):
                    rows.append([s, a, c, n])
        return rows

    write("tables/sex_age_ethnicity.csv", ["sex", "age", "ethnicity", "count"], trivariate(ETH, eth_shift))
    write("tables/sex_age_religion.csv", ["sex", "age", "religion", "count"],
          trivariate(REL, lambda a: REL_SHARE if a not in ELDER else [0.7] + REL_SHARE[1:7] + [0.15, 0.07]))
    write("tables/sex_age_qualification.csv", ["sex", "age", "qualification", "count"], trivariate(QUAL, qual_share))
    rows = []
    for a, n in zip(AGE, age_counts):
        for c, k in zip(MAR, split(n, mar_share(a))):
            rows.append([a, c, k])
    write("tables/age_marital.csv", ["age", "marital", "count"], rows)

    # composition code -> (household type, count)
    comps = [
        ("1A", "one_person", 600), ("1E", "one_person", 380),
        ("2A", "couple", 520), ("2E", "couple", 250), ("1A 1E", "couple", 60),
        ("1A 1C", "lone_parent", 140), ("1A 2C", "lone_parent", 90),
        ("2A 1C", "couple_family", 230), ("2A 2C", "couple_family", 240), ("2A 3C", "couple_family", 80),
        ("3A", "other", 180), ("3A 1C", "other", 50), ("4A", "other", 80),
    ]

    def size(code):
        return sum(int(tok[:-1]) for tok in code.split())

    write("tables/household_size_type_composition.csv", ["size", "type", "composition", "count"],
          [[str(size(c)), t, c, n] for c, t, n in comps])

    sizes = [str(s) for s in range(1, 7)]
    types = ["one_person", "couple", "lone_parent", "couple_family", "other"]
    with open(os.path.join(OUT, "household_rules.toml"), "w") as fh:
        for c, t, _ in comps:
            bad_sizes = [s for s in sizes if s != str(size(c))]
            bad_types = [x for x in types if x != t]
            fh.write('[[rule]]\nname = "size-of-{0}"\nmessage = "composition {0} requires size {1}"\n'.format(c, size(c)))
            fh.write('[[rule.when]]\nattribute = "composition"\ncategories = ["{}"]\n'.format(c))
            fh.write('[[rule.when]]\nattribute = "size"\ncategories = [{}]\n\n'.format(", ".join('"%s"' % s for s in bad_sizes)))
            fh.write('[[rule]]\nname = "type-of-{0}"\nmessage = "composition {0} requires type {1}"\n'.format(c, t))
            fh.write('[[rule.when]]\nattribute = "composition"\ncategories = ["{}"]\n'.format(c))
            fh.write('[[rule.when]]\nattribute = "type"\ncategories = [{}]\n\n'.format(", ".join('"%s"' % s for s in bad_types)))

    with open(os.path.join(OUT, "household_schema.toml"), "w") as fh:
        fh.write('[[attribute]]\nname = "size"\ncategories = [{}]\n\n'.format(", ".join('"%s"' % s for s in sizes)))
        fh.write('[[attribute]]\nname = "type"\ncategories = [{}]\n\n'.format(", ".join('"%s"' % s for s in types)))
        fh.write('[[attribute]]\nname = "composition"\ncategories = [{}]\n'.format(", ".join('"%s"' % c for c, _, _ in comps)))

    print("households:", sum(n for _, _, n in comps))


if __name__ == "__main__":
    main()
