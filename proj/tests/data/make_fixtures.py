#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Regenerates the frozen test fixtures under tests/data.

Requires RDKit. The C++ library never depends on it; RDKit is only the
reference toolkit used once to produce molecules, parse dumps, heavy-atom
conformers and R/S labels. Output is deterministic for a given RDKit build.
"""

import csv
import os
import re
import random
import sys

from rdkit import Chem, RDLogger
from rdkit.Chem import AllChem, BRICS
from rdkit.Chem.EnumerateStereoisomers import (EnumerateStereoisomers,
                                               StereoEnumerationOptions)

RDLogger.DisableLog("rdApp.*")

HERE = os.path.dirname(os.path.abspath(__file__))

SEEDS = [
    "CC(=O)Oc1ccccc1C(=O)O", "CC(C)Cc1ccc(C(C)C(=O)O)cc1", "CC(=O)Nc1ccc(O)cc1",
    "Cn1cnc2c1c(=O)n(C)c(=O)n2C", "CN1CCC[C@H]1c1cccnc1", "O=C(O)c1ccccc1O",
    "COc1ccc2[nH]cc(CCN(C)C)c2c1", "CC(C)NCC(O)COc1cccc2ccccc12",
    "Clc1ccc(C(c2ccccc2)N2CCNCC2)cc1", "CN(C)CCCN1c2ccccc2CCc2ccccc21",
    "O=C1CN=C(c2ccccc2)c2cc(Cl)ccc2N1", "Nc1ccc(S(=O)(=O)Nc2ncccn2)cc1",
    "CC1(C)SC2C(NC(=O)Cc3ccccc3)C(=O)N2C1C(=O)O", "OC(c1ccccc1)(c1ccccc1)C1CCNCC1",
    "COc1cc(C=O)ccc1O", "CCOC(=O)c1ccc(N)cc1", "Fc1ccc(C(=O)CCCN2CCC(O)(c3ccc(Cl)cc3)CC2)cc1",
    "CCN(CC)C(=O)c1cccc(C)c1", "c1ccc2c(c1)ccc1ccccc12", "O=C(Nc1ccccc1)c1ccccn1",
    "CC(=O)c1ccc(Br)cc1", "N#Cc1ccc(Oc2ccccc2)cc1", "Cc1ccc(S(=O)(=O)N)cc1",
    "CCCCOc1ccc(C(=O)N2CCOCC2)cc1", "O=C(O)CCc1c[nH]c2ccccc12", "Cc1nc(N)sc1C(=O)OCC",
    "FC(F)(F)c1ccc(OC2CCCCC2)cc1", "CC1=CC(=O)c2ccccc2C1=O", "c1ccc(-c2nc3ccccc3o2)cc1",
    "CC(C)(C)OC(=O)N1CCC(C(=O)O)CC1", "COc1ccccc1N1CCN(CCCC(=O)c2ccc(F)cc2)CC1",
    "O=c1cc(-c2ccccc2)oc2ccccc12", "NC(=O)C1=CN(C2CCCC2)C=CC1", "CSc1ncc(C#N)c(N)n1",
    "OCC1OC(O)C(O)C(O)C1O", "C=CCc1ccc(O)c(OC)c1", "CC(N)Cc1ccccc1", "OC1CCN(Cc2ccccc2)CC1",
    "Ic1ccc(NC(=O)C2CC2)cc1", "O=S1(=O)CCC(N2CCCC2)C1", "c1cnc2ccccc2c1", "c1ccc2sccc2c1",
    "CC(C)c1nc(C)cc(O)n1", "O=C(c1ccco1)N1CCNCC1", "CCc1cc2c(s1)CCCC2", "COC(=O)C1=C(C)NC(C)=C(C(=O)OC)C1c1cccc([N+](=O)[O-])c1",
    "CP(=O)(O)OCC", "OB(O)c1ccccc1", "CC[C@H](C)[C@@H](N)C(=O)O", "N[C@@H](Cc1ccccc1)C(=O)O",
]

ALLOWED = {"B", "C", "N", "O", "F", "P", "S", "Cl", "Br", "I"}


def ok(mol):
    if mol is None:
        return False
    n = mol.GetNumHeavyAtoms()
    if n < 6 or n > 30:
        return False
    if any(a.GetSymbol() not in ALLOWED for a in mol.GetAtoms()):
        return False
    if len(Chem.GetMolFrags(mol)) != 1:
        return False
    return True


def build_pool(target, rng):
    frags = set()
    for s in SEEDS:
        m = Chem.MolFromSmiles(s)
        frags.update(BRICS.BRICSDecompose(m))
    frag_mols = [Chem.MolFromSmiles(f) for f in sorted(frags)]
    frag_mols = [f for f in frag_mols if f is not None]
    pool = {}
    for s in SEEDS:
        m = Chem.MolFromSmiles(s)
        if ok(m):
            pool[Chem.MolToSmiles(m)] = True
    random.seed(rng.random())
    builder = BRICS.BRICSBuild(frag_mols, scrambleReagents=True, maxDepth=2)
    for prod in builder:
        try:
            prod.UpdatePropertyCache(strict=False)
            Chem.SanitizeMol(prod)
        except Exception:
            continue
        if not ok(prod):
            continue
        pool[Chem.MolToSmiles(prod)] = True
        if len(pool) >= target:
            break
    return sorted(pool)


def chiral_variants(smiles_list, rng, limit):
    out = []
    opts = StereoEnumerationOptions(onlyUnassigned=True, maxIsomers=2, rand=7)
    for s in smiles_list:
        m = Chem.MolFromSmiles(s)
        centers = Chem.FindMolChiralCenters(m, includeUnassigned=True, useLegacyImplementation=False)
        if len(centers) != 1:
            continue
        for iso in EnumerateStereoisomers(m, options=opts):
            out.append(Chem.MolToSmiles(iso))
        if len(out) >= limit:
            break
    return out


def rs_label(smiles):
    m = Chem.MolFromSmiles(smiles)
    centers = Chem.FindMolChiralCenters(m, includeUnassigned=False, useLegacyImplementation=False)
    if len(centers) != 1:
        return None
    return 1 if centers[0][1] == "R" else 0


ATOM_TOKEN = re.compile(r"\[[^\]]*\]|Br|Cl|[BCNOPSFI]|[bcnops]")


def written_parity(m):
    """Tetrahedral tags in SMILES-literal convention, read back from a
    non-canonical RDKit rendering that keeps the input atom order. RDKit's
    own chiral tag is relative to its internal bond order instead."""
    out = Chem.MolToSmiles(m, canonical=False)
    order = list(m.GetPropsAsDict(True, True)["_smilesAtomOutputOrder"])
    assert order == list(range(m.GetNumAtoms())), "atom order not preserved"
    tags = []
    for tok in ATOM_TOKEN.findall(out):
        if "@@" in tok:
            tags.append("CW")
        elif "@" in tok:
            tags.append("CCW")
        else:
            tags.append("NONE")
    assert len(tags) == m.GetNumAtoms()
    return tags


def dump_reference(smiles_list, path):
    with open(path, "w") as fh:
        for s in smiles_list:
            m = Chem.MolFromSmiles(s)
            ri = m.GetRingInfo()
            fh.write(f"MOL {s}\n")
            fh.write(f"COUNTS {m.GetNumAtoms()} {m.GetNumBonds()} {ri.NumRings()}\n")
            tags = written_parity(m)
            for a in m.GetAtoms():
                parity = tags[a.GetIdx()]
                fh.write(f"A {a.GetIdx()} {a.GetSymbol()} {a.GetFormalCharge()} "
                         f"{a.GetTotalNumHs()} {int(a.GetIsAromatic())} {parity} {a.GetIsotope()}\n")
            for b in m.GetBonds():
                order = {Chem.BondType.SINGLE: "SINGLE", Chem.BondType.DOUBLE: "DOUBLE",
                         Chem.BondType.TRIPLE: "TRIPLE", Chem.BondType.AROMATIC: "AROMATIC"}[b.GetBondType()]
                fh.write(f"B {b.GetBeginAtomIdx()} {b.GetEndAtomIdx()} {order}\n")
            fh.write("END\n")


def write_conformers(smiles, path, n_confs, seed):
    m = Chem.AddHs(Chem.MolFromSmiles(smiles))
    params = AllChem.ETKDGv3()
    params.randomSeed = seed
    cids = list(AllChem.EmbedMultipleConfs(m, numConfs=n_confs, params=params))
    if not cids:
        return False
    heavy = Chem.RemoveHs(m)
    with open(path, "w") as fh:
        for cid in cids:
            conf = heavy.GetConformer(cid)
            fh.write(f"{heavy.GetNumAtoms()}\nconformer {cid}\n")
            for a in heavy.GetAtoms():
                p = conf.GetAtomPosition(a.GetIdx())
                fh.write(f"{a.GetSymbol()} {p.x:.6f} {p.y:.6f} {p.z:.6f}\n")
    return True


def write_conformer_set(name, smiles_list, n_confs, labels=None):
    conf_dir = os.path.join(HERE, "conformers", name)
    os.makedirs(conf_dir, exist_ok=True)
    rows = []
    for s, lab in zip(smiles_list, labels or [None] * len(smiles_list)):
        idx = len(rows)
        if not write_conformers(s, os.path.join(conf_dir, f"{idx}.xyz"), n_confs, 1000 + idx):
            continue
        rows.append((s, lab))
    with open(os.path.join(HERE, f"{name}.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["smiles"] + (["label"] if labels else []))
        for s, lab in rows:
            w.writerow([s] + ([lab] if labels else []))
    return rows


def main():
    if "--reference-only" in sys.argv:
        path = os.path.join(HERE, "parser_reference.txt")
        with open(path) as fh:
            ref = [l.split()[1] for l in fh if l.startswith("MOL ")]
        dump_reference(ref, path)
        return
    rng = random.Random(20240611)
    pool = build_pool(1500, rng)
    rng.shuffle(pool)
    chiral = chiral_variants(pool, rng, 400)
    chiral = [c for c in chiral if rs_label(c) is not None]
    print(f"pool {len(pool)} chiral {len(chiral)}", file=sys.stderr)

    molecules = pool[:1200]
    with open(os.path.join(HERE, "molecules.smi"), "w") as fh:
        fh.write("\n".join(molecules) + "\n")

    ref = molecules[:150] + chiral[:50]
    dump_reference(ref, os.path.join(HERE, "parser_reference.txt"))

    small = [s for s in molecules if Chem.MolFromSmiles(s).GetNumAtoms() <= 22]
    write_conformer_set("pretrain200", small[:200], 3)
    labels = [rs_label(c) for c in chiral[:240]]
    write_conformer_set("chirality", chiral[:240], 1, labels)


if __name__ == "__main__":
    main()
