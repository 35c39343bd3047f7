#!/usr/bin/env python3
"""Fetch the HIV-1 protease-inhibitor dataset and convert it to the snapshot
format under data/hiv/.

Source: Stanford HIV Drug Resistance Database, published analysis of
Rhee et al. (2006), plus the treatment-selected mutation (TSM) list from
Rhee et al. (2005). Conversion conventions:

  * rows are kept only if every position cell matches ^(\\.|-|[A-Zid]+)$
    (drops sequences with '#'/'~' indel artifacts),
  * '-' (consensus) and '.' (no sequence) mean "mutation absent",
  * every residue letter A-Z plus the codes 'i'/'d' observed at a position
    becomes one indicator column labeled "<position><residue>",
  * columns with at least one occurrence are written; the loader applies the
    >= 4 occurrence analysis filter,
  * fold-resistance columns (APV ATV IDV LPV NFV RTV SQV) pass through
    unchanged, with NA for missing.

Usage: python3 scripts/fetch_hiv_data.py [--out data/hiv]
"""

import argparse
import os
import re
import sys
import urllib.request

BASE = "https://hivdb.stanford.edu/_wrapper/pages/published_analysis/genophenoPNAS2006"
GENE_URL = f"{BASE}/DATA/PI_DATA.txt"
TSM_URL = f"{BASE}/MUTATIONLISTS/NP_TSM/PI"

DRUGS = ["APV", "ATV", "IDV", "LPV", "NFV", "RTV", "SQV"]
CELL_RE = re.compile(r"^(\.|-|[A-Zid]+)$")
EXPECTED = (846, 186)  # (patients, mutations with >= 4 occurrences)


def fetch(url):
    print(f"fetching {url}", file=sys.stderr)
    with urllib.request.urlopen(url) as r:
        return r.read().decode("utf-8", errors="replace")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data/hiv")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    gene = fetch(GENE_URL).splitlines()
    header = gene[0].split("\t")
    pos_start = header.index("P1")
    pos_names = header[pos_start:]
    positions = [int(h[1:]) for h in pos_names]
    drug_idx = {d: header.index(d) for d in DRUGS}
    id_idx = header.index("SeqID") if "SeqID" in header else 0

    rows = []
    for line in gene[1:]:
        if not line.strip():
            continue
        fields = line.split("\t")
        cells = fields[pos_start:]
        if len(cells) != len(positions):
            continue
        if not all(CELL_RE.match(c or ".") for c in cells):
            continue  # indel artifacts
        rows.append(fields)
    print(f"valid sequences: {len(rows)}", file=sys.stderr)

    # Observed residues per position -> indicator columns.
    residues = {}
    for fields in rows:
        for pos, cell in zip(positions, fields[pos_start:]):
            if cell in ("-", ".", ""):
                continue
            for ch in cell:
                if ch.isalpha():
                    residues.setdefault(pos, set()).add(ch)
    columns = [(pos, ch) for pos in sorted(residues) for ch in sorted(residues[pos])]

    data = []
    for fields in rows:
        cellmap = dict(zip(positions, fields[pos_start:]))
        data.append([1 if ch in cellmap[pos] else 0 for pos, ch in columns])

    occ = [sum(r[j] for r in data) for j in range(len(columns))]
    keep = [j for j in range(len(columns)) if occ[j] >= 1]
    kept4 = sum(1 for j in keep if occ[j] >= 4)
    print(f"columns with >=1 occurrence: {len(keep)}; with >=4: {kept4}",
          file=sys.stderr)
    if (len(rows), kept4) != EXPECTED:
        print(f"warning: got (n={len(rows)}, p4={kept4}), expected {EXPECTED}; "
              "upstream data may have changed", file=sys.stderr)

    with open(os.path.join(args.out, "mutations.tsv"), "w") as f:
        f.write("# converted from the published protease-inhibitor dataset\n")
        f.write("patient_id\t" + "\t".join(f"{p}{c}" for (p, c) in
                                           (columns[j] for j in keep)) + "\n")
        for fields, row in zip(rows, data):
            f.write(str(fields[id_idx]) + "\t" +
                    "\t".join(str(row[j]) for j in keep) + "\n")

    with open(os.path.join(args.out, "susceptibility.tsv"), "w") as f:
        f.write("# fold drug susceptibility; NA = missing\n")
        f.write("patient_id\t" + "\t".join(DRUGS) + "\n")
        for fields in rows:
            vals = []
            for d in DRUGS:
                v = fields[drug_idx[d]].strip()
                vals.append(v if v and v != "NA" else "NA")
            f.write(str(fields[id_idx]) + "\t" + "\t".join(vals) + "\n")

    tsm = fetch(TSM_URL).splitlines()
    with open(os.path.join(args.out, "tsm.txt"), "w") as f:
        f.write("# treatment-selected mutation positions\n")
        for line in tsm:
            toks = line.split()
            if toks and toks[0].isdigit():
                f.write(toks[0] + "\n")

    print(f"wrote snapshot to {args.out}", file=sys.stderr)


if __name__ == "__main__":
    main()
