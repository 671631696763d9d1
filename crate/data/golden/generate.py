"""Generates the 12-paper golden corpus under data/golden.

Paragraph text carries inline [[surface|CAT]] markup; the markup is stripped
and entity character spans are mapped onto the Rust tokenizer's tokens (a
line-for-line port of corpus::tokenize / split_sentences below).
"""
import json
import re
import sys
from pathlib import Path

OUT = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent
DOI = "10.5555/t2br-gold.{:02d}"

JOINERS = set(".·⋅•/-–—")


def tokenize(text):
    chars = list(text)
    n = len(chars)
    toks = []
    i = 0
    while i < n:
        c = chars[i]
        starts_degree = c == "°" and i + 1 < n and chars[i + 1].isalpha()
        if not c.isalnum() and not starts_degree:
            i += 1
            continue
        start = i
        j = i + 1
        while j < n:
            cj = chars[j]
            if cj.isalnum():
                j += 1
            elif cj in JOINERS and j + 1 < n and chars[j + 1].isalnum():
                j += 2
            elif cj == "%" and chars[j - 1] in "0123456789":
                j += 1
                break
            else:
                break
        toks.append(("".join(chars[start:j]), start, j))
        i = j
    return toks


def split_sentences(text):
    chars = list(text)
    n = len(chars)
    spans = []
    start = 0
    i = 0
    while i < n:
        if chars[i] in ".!?":
            j = i + 1
            while j < n and chars[j].isspace():
                j += 1
            boundary = j == n or (j > i + 1 and chars[j].isupper())
            if boundary:
                spans.append((start, i + 1))
                start = j
                i = j
                continue
        i += 1
    if start < n and any(not c.isspace() for c in chars[start:]):
        spans.append((start, n))
    return spans


def sentences_with_tokens(text):
    toks = tokenize(text)
    spans = split_sentences(text)
    out = [[] for _ in spans]
    s = 0
    for t in toks:
        while s + 1 < len(spans) and t[1] >= spans[s][1]:
            s += 1
        if s < len(out):
            out[s].append(t)
    return [x for x in out if x]


MARK = re.compile(r"\[\[(.+?)\|([A-Z]+)\]\]")


def strip_markup(marked):
    plain = []
    ents = []
    pos = 0
    last = 0
    for m in MARK.finditer(marked):
        before = marked[last:m.start()]
        plain.append(before)
        pos += len(before)
        surface, cat = m.group(1), m.group(2)
        ents.append((pos, pos + len(surface), cat, surface))
        plain.append(surface)
        pos += len(surface)
        last = m.end()
    plain.append(marked[last:])
    return "".join(plain), ents


def annotate(doi, ordinal, marked, schema):
    text, ents = strip_markup(marked)
    sents = sentences_with_tokens(text)
    rows = []
    for si, toks in enumerate(sents):
        spans = []
        for (cs, ce, cat, surface) in ents:
            idx = [k for k, t in enumerate(toks) if t[1] >= cs and t[2] <= ce]
            if not idx:
                continue
            first, last = idx[0], idx[-1]
            tail = text[toks[last][2]:ce]
            if toks[first][1] != cs or any(ch.isalnum() for ch in tail):
                raise SystemExit(f"entity `{surface}` in {doi}/{ordinal} does not align with tokens")
            spans.append({"category": cat, "start": first, "end": last + 1})
        rows.append({
            "tokens": [t[0] for t in toks],
            "spans": sorted(spans, key=lambda s: s["start"]),
            "schema": schema,
            "paper_doi": doi,
            "ordinal": ordinal,
            "sentence": si,
        })
    placed = sum(len(r["spans"]) for r in rows)
    if placed != len(ents):
        raise SystemExit(f"{doi}/{ordinal}: placed {placed} of {len(ents)} entities")
    return text, rows


# kind: syn / asm (annotated), syn-raw (model-tagged), other.
PAPERS = [
    {   # 01: reference recipe for the worked query example
        "title": "Carbon-coated LiFePO4 from a solid-state route with mixed carbon sources",
        "abstract": "LiFePO4/C cathode material was synthesized by a solid-state reaction of LiH2PO4 and FeC2O4·2H2O with sucrose and citric acid as carbon sources. The carbon coating improved the rate capability of lithium-ion battery cathodes assembled in coin cells.",
        "paragraphs": [
            ("other", "Olivine LiFePO4 is a safe and inexpensive cathode material for lithium-ion batteries."),
            ("syn", "The [[LiFePO4/C|TM]] composite was synthesized by a [[solid-state|METH]] reaction. Stoichiometric amounts of [[LiH2PO4|PREC]] and [[FeC2O4·2H2O|PREC]] were mixed with [[5%|AMO]] [[sucrose|PREC]] and [[5%|AMO]] [[citric acid|PREC]] in [[ethanol|SOLV]] to form a uniform mixture. The mixture was ball-milled for [[6 h|TIME]] and dried at [[80 °C|TEMP]] to obtain a precursor powder. The powder was heated at [[700 °C|TEMP]] for [[10 h|TIME]] under [[Ar|ATM]] atmosphere and then cooled to room temperature."),
            ("other", "X-ray diffraction patterns of the sample show sharp peaks indexed to the orthorhombic olivine structure without impurity phases. SEM images reveal uniform particles of about 200 nm, and Raman spectra confirm a thin amorphous carbon layer on the particle surface."),
            ("asm", "The cathode electrode was prepared by mixing the [[LiFePO4/C|AM]] active material, [[Super P|CA]] and [[PVDF|BIND]] in [[NMP|SOLV]] to form a slurry. The slurry was coated onto [[aluminum foil|CC]] and dried at [[120 °C|TEMP]] for [[12 h|TIME]] in a vacuum oven. A [[CR2032|CS]] coin cell was assembled in a glove box with the cathode electrode, [[lithium foil|ANO]] as the counter electrode and a microporous [[PE|SEPA]] film as the separator. The electrolyte of the cell was [[LiPF6|SALT]] dissolved in [[EC|SOLV]] and [[DEC|SOLV]]."),
        ],
    },
    {   # 02: sol-gel; two assembly paragraphs dedupe to one recipe
        "title": "Sol-gel synthesis of LiFePO4/C and its performance in coin and pouch cells",
        "abstract": "A citric acid assisted sol-gel route yields LiFePO4/C cathode powder with a uniform carbon coating. Coin cells and pouch cells with the LiFePO4/C cathode deliver stable cycling in lithium-ion batteries.",
        "paragraphs": [
            ("syn", "[[LiFePO4/C|TM]] was prepared by a [[sol-gel|METH]] route. [[Lithium acetate|PREC]], [[iron nitrate|PREC]] and [[NH4H2PO4|PREC]] were dissolved in [[deionized water|SOLV]] to form a clear solution. [[Citric acid|PREC]] was added to the solution as a chelating agent and carbon source. The solution was stirred at [[80 °C|TEMP]] for [[4 h|TIME]] until a gel formed, and the gel was dried [[overnight|TIME]]. The resulting powder was calcined at [[650 °C|TEMP]] for [[8 h|TIME]] under [[N2|ATM]] flow."),
            ("other", "The diffraction peaks of the product match the standard olivine pattern and the lattice parameters agree with reported values. Transmission microscopy shows that the primary particles are covered by a continuous carbon shell of about 3 nm thickness."),
            ("asm", "The cathode electrode consisted of [[LiFePO4/C|AM]], [[acetylene black|CA]] and [[PTFE|BIND]], and the electrode film was pressed onto [[aluminium foil|CC]]. A [[CR2016|CS]] coin cell was assembled with [[Li metal|ANO]] as the counter electrode, a [[Celgard 2400|SEPA]] separator and an electrolyte of [[LiPF6|SALT]] in [[EC|SOLV]] and [[DMC|SOLV]]. The cell was rested before electrochemical tests."),
            ("asm", "For the full cell the [[LiFePO4/C|AM]] cathode electrode was paired with a [[graphite|ANO]] anode electrode on [[copper foil|CC]]. The electrode stack was separated by a [[PP|SEPA]] film, filled with [[LiPF6|SALT]] electrolyte in [[EC|SOLV]] and [[DEC|SOLV]], and sealed in an aluminum laminated [[pouch|CS]] cell for electrochemical cycling."),
        ],
    },
    {   # 03: hydrothermal; AM written as a name that normalizes to the TM
        "title": "Hydrothermal LiFePO4 particles for lithium-ion battery cathodes",
        "abstract": "LiFePO4 particles were obtained by a hydrothermal method from LiOH, FeSO4 and H3PO4. The cathode was tested in half cells and showed good rate capability for lithium-ion batteries.",
        "paragraphs": [
            ("other", "Hydrothermal routes give good control over particle size of olivine cathodes."),
            ("syn", "[[LiFePO4|TM]] particles were synthesized by a [[hydrothermal|METH]] method. [[LiOH|PREC]], [[FeSO4·7H2O|PREC]] and [[H3PO4|PREC]] were dissolved in [[distilled water|SOLV]] in a molar ratio of [[3:1:1|RAT]] to form a solution. The solution was transferred into an autoclave and heated at [[180 °C|TEMP]] for [[10 h|TIME]]. The precipitate was washed with [[ethanol|SOLV]] and dried at [[60 °C|TEMP]] to obtain the final powder."),
            ("asm", "Electrodes were fabricated from [[lithium iron phosphate|AM]], [[carbon black|CA]] and [[polyvinylidene fluoride|BIND]] dispersed in [[N-methyl-2-pyrrolidone|SOLV]]. The slurry was cast on [[Al foil|CC]] and the cathode electrode was dried at [[110 °C|TEMP]] under vacuum. A half cell was assembled with the electrode, [[Li foil|ANO]], a [[PP|SEPA]] separator and [[LiPF6|SALT]] electrolyte, and the cell was used for electrochemical tests."),
            ("other", "The discharge capacity reached 155 mAh g−1 at 0.1C and 120 mAh g−1 at 5C, and the capacity retention after 100 cycles was 97%. The voltage profiles show a flat plateau near 3.4 V that is characteristic of the two-phase reaction."),
        ],
    },
    {   # 04: synthesis only; its target matches paper 05's active material (rule 1)
        "title": "Glucose-derived carbon coating on LiFePO4 by solid-state synthesis",
        "abstract": "LiFePO4/C cathode powder was prepared by solid-state synthesis using glucose as carbon source. The study focuses on particle morphology and carbon content of the cathode material for lithium-ion batteries.",
        "paragraphs": [
            ("syn", "[[LiFePO4/C|TM]] powder was prepared by a [[solid state|METH]] method. [[Li2CO3|PREC]], [[FeC2O4·2H2O|PREC]] and [[NH4H2PO4|PREC]] were mixed with [[10%|AMO]] [[glucose|PREC]] in [[acetone|SOLV]] and milled for [[5 h|TIME]]. The dried mixture was pre-heated at [[350 °C|TEMP]] for [[5 h|TIME]] and then sintered at [[750 °C|TEMP]] for [[10 h|TIME]] in [[Ar/H2|ATM]] atmosphere to obtain the powder."),
            ("other", "Thermogravimetric analysis gives a carbon content of 2.1 wt% and the specific surface area measured by nitrogen adsorption is 28 m2 g−1. Particles are spherical with a narrow size distribution centered at 300 nm."),
        ],
    },
    {   # 05: assembly only, with a commercial cathode (rule 1 partner)
        "title": "Electrolyte additives for commercial LiFePO4/C cells",
        "abstract": "Commercial LiFePO4/C cathodes were assembled into coin cells to compare electrolyte additives for lithium-ion batteries. Cells with additive show improved cycling at elevated temperature.",
        "paragraphs": [
            ("asm", "Commercial [[LiFePO4/C|AM]] was mixed with [[Super P|CA]] and [[PVDF|BIND]] in [[NMP|SOLV]], and the slurry was coated on [[Al foil|CC]]. A [[CR2032|CS]] coin cell was assembled with the cathode electrode, [[Li foil|ANO]], a [[Celgard 2400|SEPA]] separator and [[LiPF6|SALT]] electrolyte in [[EC|SOLV]] and [[EMC|SOLV]] with the additive."),
            ("other", "Impedance spectra recorded after 50 cycles show a smaller charge transfer resistance with the additive, and post-mortem surface analysis detects a thinner interphase layer rich in fluoride species."),
        ],
    },
    {   # 06: target LiFePO4 vs active material LiFePO4/C (rule 2)
        "title": "Co-precipitated LiFePO4 and its carbon-coated derivative",
        "abstract": "LiFePO4 was synthesized by co-precipitation and later coated with carbon. Carbon-coated LiFePO4 cathodes were tested in lithium-ion coin cells.",
        "paragraphs": [
            ("syn", "[[LiFePO4|TM]] was synthesized by [[co-precipitation|METH]]. [[FeSO4|PREC]], [[LiOH|PREC]] and [[H3PO4|PREC]] were dissolved in [[water|SOLV]] and the solution was stirred for [[2 h|TIME]]. The precipitate was filtered, washed and dried at [[100 °C|TEMP]] to obtain a powder. The powder was heated at [[600 °C|TEMP]] for [[6 h|TIME]] under [[N2|ATM]] and cooled to room temperature."),
            ("asm", "The cathode electrode was made from [[carbon-coated LiFePO4|AM]], [[Super P|CA]] and [[PVDF|BIND]] coated on [[Al foil|CC]]. The coin cell used [[Li foil|ANO]] as the counter electrode, a [[PE|SEPA]] separator and [[LiPF6|SALT]] electrolyte, and each cell was assembled in a glove box."),
            ("other", "Rietveld refinement indicates an antisite defect concentration below 1% and lattice parameters consistent with stoichiometric olivine. The particle size from Scherrer analysis is about 80 nm."),
        ],
    },
    {   # 07: no method named in the synthesis paragraph (rule 3)
        "title": "Effect of calcination atmosphere on LiFePO4/C",
        "abstract": "LiFePO4/C was prepared from lithium and iron precursors and calcined under different atmospheres. The cathode was evaluated in lithium-ion coin cells.",
        "paragraphs": [
            ("syn", "[[LiFePO4/C|TM]] was obtained from [[LiH2PO4|PREC]] and [[FeC2O4·2H2O|PREC]] with [[sucrose|PREC]] as carbon source. The precursors were mixed in [[ethanol|SOLV]] to form a mixture, and the mixture was dried at [[80 °C|TEMP]]. The powder was heated at [[650 °C|TEMP]] for [[8 h|TIME]] under [[Ar|ATM]] and cooled to room temperature."),
            ("asm", "The [[LiFePO4/C|AM]] cathode electrode contained [[acetylene black|CA]] and [[PVDF|BIND]] and was coated on [[Al foil|CC]]. A coin cell was assembled with the electrode, [[Li foil|ANO]], a [[PP|SEPA]] separator and [[LiPF6|SALT]] electrolyte, and the cell was used for electrochemical tests."),
            ("other", "Samples calcined in reducing atmosphere show no Fe3+ impurity phases in Mossbauer spectra, whereas samples treated in inert gas contain traces of Fe2P at grain boundaries. Particles of both samples are about 150 nm."),
        ],
    },
    {   # 08: links only after normalization of both sides
        "title": "Solid-state synthesis of LiFePO4/carbon from lithium carbonate and iron oxalate",
        "abstract": "LiFePO4/Carbon composite was prepared by solid-state reaction of lithium carbonate, iron(II) oxalate dihydrate and ammonium dihydrogen phosphate with glucose. Carbon-coated LiFePO4 cathodes were assembled in coin cells for lithium-ion batteries.",
        "paragraphs": [
            ("syn", "[[LiFePO4/Carbon|TM]] was prepared by a [[solid-state reaction|METH]]. [[Lithium carbonate|PREC]], [[iron(II) oxalate dihydrate|PREC]] and [[ammonium dihydrogen phosphate|PREC]] were mixed with [[glucose|PREC]] in [[absolute ethanol|SOLV]] to form a slurry mixture. The mixture was dried at [[70 °C|TEMP]], and the powder was heated at [[300 °C|TEMP]] for [[4 h|TIME]] and then at [[700 °C|TEMP]] for [[12 h|TIME]] under [[argon|ATM]]."),
            ("other", "Particles show an irregular shape with sizes of 0.5 to 1 micrometer, and the carbon layer thickness measured by microscopy is between 2 and 5 nm. Diffraction peaks are sharp and no impurity phases are detected."),
            ("asm", "The [[carbon-coated LiFePO4|AM]] electrode was prepared with [[super P|CA]] and [[PVdF|BIND]] in [[NMP|SOLV]] and coated on [[aluminium foil|CC]]. A [[CR2025|CS]] coin cell was assembled with the cathode electrode, [[lithium metal|ANO]], a [[polypropylene|SEPA]] separator and [[lithium hexafluorophosphate|SALT]] electrolyte in [[EC|SOLV]] and [[DMC|SOLV]]."),
        ],
    },
    {   # 09: two synthesis paragraphs; only the second targets the active material
        "title": "FePO4 precursor route to LiFePO4/C",
        "abstract": "FePO4 precursor was prepared by co-precipitation and converted to LiFePO4/C by carbothermal reduction with Li2CO3. The cathode was tested in lithium-ion coin cells.",
        "paragraphs": [
            ("syn", "[[FePO4|TM]] precursor was prepared by [[co-precipitation|METH]]. [[FeSO4|PREC]] and [[NH4H2PO4|PREC]] solutions were mixed and [[H2O2|PREC]] was added dropwise under stirring. The precipitate was washed with [[water|SOLV]] and dried at [[80 °C|TEMP]] for [[12 h|TIME]] to obtain a white powder."),
            ("syn", "[[LiFePO4/C|TM]] was synthesized by [[carbothermal reduction|METH]]. The [[FePO4|PREC]] powder was mixed with [[Li2CO3|PREC]] and [[PEG|PREC]] in [[ethanol|SOLV]] and ball-milled for [[4 h|TIME]]. The mixture was dried and heated at [[650 °C|TEMP]] for [[9 h|TIME]] under [[N2|ATM]] to obtain the powder."),
            ("asm", "The cathode electrode was made of [[LiFePO4/C|AM]], [[carbon black|CA]] and [[PVDF|BIND]] on [[Al foil|CC]]. A [[CR2032|CS]] coin cell was assembled with the electrode, [[Li foil|ANO]], a [[Celgard 2400|SEPA]] separator and [[LiPF6|SALT]] electrolyte in [[EC|SOLV]] and [[DEC|SOLV]]."),
        ],
    },
    {   # 10: synthesis only; not annotated, tagged by the model
        "title": "Solvothermal LiFePO4 nanoplates",
        "abstract": "LiFePO4 nanoplates were synthesized by a solvothermal method in ethylene glycol. The morphology of the cathode material is discussed for lithium-ion batteries.",
        "paragraphs": [
            ("syn-raw", "LiFePO4 nanoplates were synthesized by a solvothermal method. LiOH and FeSO4 were dissolved in ethylene glycol to form a solution, and H3PO4 was added to the mixture under stirring. The solution was heated at 180 °C for 12 h in an autoclave, and the powder was washed with ethanol and dried at 60 °C."),
            ("other", "The nanoplates are about 50 nm thick with the b axis oriented along the thickness, which shortens the lithium diffusion path. Selected area diffraction confirms the single crystalline nature of the plates."),
        ],
    },
    {   # 11: off-topic, screened out by the classifier
        "title": "Kalman filter state-of-charge estimation for battery packs",
        "abstract": "An extended Kalman filter estimates the state of charge of battery packs from voltage and current measurements. The algorithm runs on an embedded battery management system and tracks model parameters online.",
        "paragraphs": [
            ("other", "The equivalent circuit model consists of an open circuit voltage source, a series resistance and two RC branches whose parameters are identified online. The filter covariance is tuned on driving cycle data and the estimation error stays below two percent."),
        ],
    },
    {   # 12: off-topic, screened out by the classifier
        "title": "Moisture stability of perovskite solar cells",
        "abstract": "Perovskite solar cells degrade under humidity. Encapsulation layers and hydrophobic hole transport materials extend the device lifetime under illumination.",
        "paragraphs": [
            ("other", "Devices were stored at 85% relative humidity under one sun illumination and the power conversion efficiency was tracked over 1000 hours. Hydrophobic hole transport layers retained 90% of the initial efficiency."),
        ],
    },
]

TRAINING = [
    (True, "Synthesis of LiFePO4/C cathode by solid-state reaction", "LiFePO4/C cathode material was synthesized by solid-state reaction with sucrose as carbon source and tested in lithium-ion coin cells."),
    (True, "Sol-gel LiFePO4 cathode with citric acid", "A sol-gel method with citric acid produced carbon-coated LiFePO4 cathode powder with high rate capability in lithium-ion batteries."),
    (True, "Hydrothermal synthesis of LiFePO4 nanoparticles", "LiFePO4 nanoparticles were prepared by a hydrothermal method and the cathode delivered high capacity in coin cells."),
    (True, "Carbon coating of LiFePO4 by glucose pyrolysis", "Glucose pyrolysis forms a carbon coating on LiFePO4 particles and improves the conductivity of the cathode material."),
    (True, "Co-precipitation route to LiFePO4 cathode", "LiFePO4 cathode material was obtained by co-precipitation of iron phosphate followed by lithiation and calcination."),
    (True, "Electrode preparation and cell assembly with LiFePO4", "LiFePO4 cathodes with PVDF binder and Super P were coated on aluminum foil and assembled into coin cells with lithium foil anodes."),
    (True, "Solvothermal LiFePO4 with controlled morphology", "A solvothermal synthesis in ethylene glycol gives LiFePO4 cathode plates with short lithium diffusion paths."),
    (True, "Carbothermal reduction synthesis of LiFePO4/C", "FePO4 and Li2CO3 were converted to LiFePO4/C cathode by carbothermal reduction and evaluated in lithium-ion batteries."),
    (False, "Battery state of health estimation with neural networks", "A recurrent neural network estimates the state of health of battery packs from charge and discharge measurements in electric vehicles."),
    (False, "Kalman filtering for battery management systems", "Kalman filter algorithms estimate the state of charge in a battery management system using an equivalent circuit model."),
    (False, "Perovskite solar cell efficiency", "Perovskite solar cells reach high power conversion efficiency, but moisture and illumination degrade the devices."),
    (False, "Grid storage dispatch optimization", "An optimization model schedules grid battery storage dispatch to reduce electricity cost under price uncertainty."),
    (False, "Recycling economics of spent batteries", "A techno-economic analysis compares hydrometallurgical and pyrometallurgical recycling of spent battery packs."),
    (False, "Thermal management of battery modules", "Liquid cooling plates and phase change materials control the temperature of battery modules during fast charging."),
    (False, "Hydrogen fuel cell degradation", "Proton exchange membrane fuel cells degrade under load cycling; catalyst layer durability is studied with accelerated stress tests."),
    (False, "Organic photovoltaic device stability", "Encapsulation and interlayer engineering improve the operational stability of organic solar cells under humidity."),
]


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    papers, paragraphs, syn_ann, asm_ann = [], [], [], []
    for i, p in enumerate(PAPERS, start=1):
        doi = DOI.format(i)
        papers.append({"doi": doi, "title": p["title"], "abstract": p["abstract"]})
        for ordinal, (kind, marked) in enumerate(p["paragraphs"]):
            if kind in ("syn", "asm"):
                schema = "synthesis" if kind == "syn" else "assembly"
                text, rows = annotate(doi, ordinal, marked, schema)
                (syn_ann if kind == "syn" else asm_ann).extend(rows)
            else:
                text, ents = strip_markup(marked)
                assert not ents
            paragraphs.append({"paper_doi": doi, "ordinal": ordinal, "text": text})
    training = [
        {"doi": f"10.5555/t2br-train.{i:02d}", "title": t, "abstract": a, "label": lab}
        for i, (lab, t, a) in enumerate(TRAINING, start=1)
    ]

    def dump(name, rows):
        with open(OUT / name, "w", encoding="utf-8") as f:
            for r in rows:
                f.write(json.dumps(r, ensure_ascii=False) + "\n")

    dump("papers.jsonl", papers)
    dump("training_papers.jsonl", training)
    dump("paragraphs.jsonl", paragraphs)
    dump("annotations_synthesis.jsonl", syn_ann)
    dump("annotations_assembly.jsonl", asm_ann)
    print(f"{len(papers)} papers, {len(paragraphs)} paragraphs, "
          f"{len(syn_ann)} synthesis and {len(asm_ann)} assembly sentences")


if __name__ == "__main__":
    main()
