"""Seeded synthetic corpora with planted citance cues.

Transformative documents get contrast cues in their citing sentences
("however", "questioned", negation, past-tense verbs).  Everything else,
abstracts included, is drawn from the same pool for both classes, so any
signal a model finds in abstracts is noise.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .corpus import (
    ArticleRecord,
    CitingSentence,
    ExpertRecommendation,
    MeshTerm,
    PartialDate,
    RecommendationTag,
    T_TAGS,
)

DRUGS = [
    "aspirin", "metformin", "statin therapy", "propofol", "vitamin D", "omeprazole",
    "warfarin", "heparin", "probiotics", "tranexamic acid", "dexamethasone", "insulin",
    "rituximab", "amiodarone", "albumin", "clopidogrel", "tamoxifen", "azithromycin",
]
CONDITIONS = [
    "sepsis", "atrial fibrillation", "colorectal cancer", "heart failure", "asthma",
    "type 2 diabetes", "stroke", "acute kidney injury", "pneumonia", "preterm birth",
    "Barrett's oesophagus", "hypertension", "critical illness", "osteoporosis",
]
OUTCOMES = [
    "mortality", "readmission", "length of stay", "recurrence", "bleeding events",
    "quality of life", "infection rates", "functional recovery", "blood pressure",
]
AUTHORS = ["Smith", "Tanaka", "Garcia", "Nguyen", "Okafor", "Muller", "Rossi", "Kowalski", "Chen", "Larsen"]

NEUTRAL = [
    "{author} et al. report a trial of {drug} in patients with {cond} [{ref}].",
    "A trial of {drug} in {cond} reports effects on {outcome} [{ref}].",
    "{drug} is used in adults with {cond} in many centres [{ref}].",
    "The trial by {author} and colleagues describes {outcome} after {drug} [{ref}].",
    "Patients with {cond} receive {drug} in the trial by {author} et al. [{ref}].",
    "Data on {drug} and {outcome} in {cond} are available from a multicentre trial [{ref}].",
    "{author} et al. describe the design of a trial of {drug} for {cond} [{ref}].",
    "In this cohort, {drug} is given to patients with {cond} and {outcome} is recorded [{ref}].",
]
CUES = [
    "However, the benefit of {drug} in {cond} was questioned by {author} et al. [{ref}].",
    "However, these findings were not confirmed and the effect on {outcome} remained in question [{ref}].",
    "The reported benefit of {drug} was not reproduced and {author} questioned the trial design [{ref}].",
    "However, {author} et al. found no reduction in {outcome} and challenged earlier claims [{ref}].",
    "This result was disputed, and the question of {drug} in {cond} was reopened [{ref}].",
    "However, a later trial did not show that {drug} reduced {outcome} in {cond} [{ref}].",
]
ABSTRACT = [
    "We enrolled {n} patients with {cond} across {k} centres.",
    "Participants were assigned to {drug} or usual care.",
    "The primary outcome was {outcome} at {k} months.",
    "Secondary outcomes included {outcome2} and adverse events.",
    "Baseline characteristics were similar between groups.",
    "Follow-up was complete for {pct} percent of participants.",
    "Analyses followed the intention-to-treat principle.",
    "The median age was {age} years and {pct} percent were women.",
    "Adverse events were recorded at each visit.",
    "The effect of {drug} on {outcome} is reported with 95% confidence intervals.",
    "Subgroup analyses by age and sex are presented.",
    "These results inform the management of {cond}.",
    "Changes in {t1} {t2} were measured alongside {t3} {t4}.",
    "The {t1} {t2} group showed {t3} {t4} after {k} weeks.",
    "Exploratory analyses examined {t1} {t2} and {t3} {t4}.",
    "{t1} {t2} was assessed by {t3} {t4} at baseline.",
]
# filler vocabulary shared by both classes; makes the abstract block wide
# and uninformative, as real abstracts are
TERMS = """
serum plasma urinary hepatic renal cardiac pulmonary vascular neural cortical
insulin glucose lipid sodium potassium calcium creatinine albumin ferritin cortisol
interleukin cytokine antibody receptor platelet lymphocyte neutrophil monocyte marrow endothelial
systolic diastolic arterial venous capillary regional peripheral central proximal distal
oxygen saturation perfusion ventilation filtration clearance absorption secretion excretion uptake
biomarker genotype phenotype allele variant expression methylation transcription signalling pathway
dose infusion bolus titration exposure adherence tolerance toxicity clearance interval
fatigue pain nausea dyspnoea oedema fever delirium anxiety sleep appetite
imaging ultrasound tomography resonance angiography biopsy endoscopy histology cytology assay
frailty mobility cognition nutrition weight adiposity muscle bone skin airway
""".split()
MESH = [
    "Anti-Bacterial Agents/therapeutic use", "Critical Illness/therapy", "Hospital Mortality",
    "Cardiac Surgical Procedures", "Fluid Therapy/methods", "Probiotics/therapeutic use",
    "Propofol/administration & dosage", "Cross Infection/prevention & control",
    "Antineoplastic Combined Chemotherapy Protocols/therapeutic use", "Critical Care/methods",
    "Immunosuppressive Agents/therapeutic use", "Anti-Arrhythmia Agents/therapeutic use",
]
JOURNALS = ["N Engl J Med", "Lancet", "JAMA", "BMJ", "Ann Intern Med", "Crit Care Med", "Gut"]
NON_LABELING = [
    RecommendationTag.GoodForTeaching,
    RecommendationTag.InterestingHypothesis,
    RecommendationTag.NewFinding,
    RecommendationTag.NovelDrugTarget,
    RecommendationTag.TechnicalAdvance,
]


@dataclass(frozen=True)
class SyntheticSpec:
    n_docs: int = 600
    positive_fraction: float = 0.55
    cue_rate: float = 0.6
    citances: tuple[int, int] = (3, 7)
    abstract_sentences: tuple[int, int] = (10, 16)
    late_citances: int = 1
    seed: int = 0


def _fill(rng: random.Random, template: str) -> str:
    return template.format(
        author=rng.choice(AUTHORS),
        drug=rng.choice(DRUGS),
        cond=rng.choice(CONDITIONS),
        outcome=rng.choice(OUTCOMES),
        outcome2=rng.choice(OUTCOMES),
        n=rng.randint(40, 4000),
        k=rng.randint(2, 36),
        pct=rng.randint(10, 99),
        age=rng.randint(30, 80),
        ref=rng.randint(1, 40),
        t1=rng.choice(TERMS),
        t2=rng.choice(TERMS),
        t3=rng.choice(TERMS),
        t4=rng.choice(TERMS),
    )


def _add_months(d: PartialDate, months: int) -> PartialDate:
    total = d.year * 12 + (d.month or 1) - 1 + months
    return PartialDate(total // 12, total % 12 + 1)


def make_record(i: int, positive: bool, spec: SyntheticSpec, rng: random.Random) -> ArticleRecord:
    pub = PartialDate(rng.randint(2001, 2017), rng.randint(1, 12))
    n_cit = rng.randint(*spec.citances)
    cits = []
    for c in range(n_cit):
        if positive and rng.random() < spec.cue_rate:
            text = _fill(rng, rng.choice(CUES))
        else:
            text = _fill(rng, rng.choice(NEUTRAL))
        cits.append(CitingSentence(text, str(20_000_000 + i * 100 + c), _add_months(pub, rng.randint(0, 23))))
    for c in range(spec.late_citances):
        # outside the window, carries a cue for either class and must be ignored
        text = _fill(rng, rng.choice(CUES))
        cits.append(CitingSentence(text, str(20_000_000 + i * 100 + 50 + c), _add_months(pub, rng.randint(30, 60))))
    rng.shuffle(cits)

    abstract = " ".join(
        _fill(rng, rng.choice(ABSTRACT)) for _ in range(rng.randint(*spec.abstract_sentences))
    )
    if positive:
        pool = sorted(T_TAGS, key=lambda t: t.value)
        recs = [
            ExpertRecommendation(f"e{i}a", {rng.choice(pool)} | {rng.choice(NON_LABELING)}),
            ExpertRecommendation(f"e{i}b", {rng.choice(pool)}),
        ]
    else:
        recs = [
            ExpertRecommendation(f"e{i}a", {RecommendationTag.Confirmation}),
            ExpertRecommendation(f"e{i}b", {RecommendationTag.Confirmation, rng.choice(NON_LABELING)}),
        ]
    mesh = [MeshTerm(t, rng.random() < 0.5) for t in rng.sample(MESH, rng.randint(2, 5))]
    return ArticleRecord(
        pmid=str(10_000_000 + i),
        title=f"{rng.choice(DRUGS).capitalize()} in {rng.choice(CONDITIONS)}: a randomised clinical trial",
        abstract=abstract,
        pub_date=pub,
        mesh_terms=tuple(mesh),
        recommendations=tuple(recs),
        citances=tuple(cits),
        journal=rng.choice(JOURNALS),
        publication_types=("Journal Article", "Randomized Controlled Trial"),
    )


def generate(spec: SyntheticSpec = SyntheticSpec()) -> list[ArticleRecord]:
    """Unlabeled records; run them through ``corpus.filter_corpus`` to label."""
    rng = random.Random(spec.seed)
    n_pos = round(spec.n_docs * spec.positive_fraction)
    flags = [True] * n_pos + [False] * (spec.n_docs - n_pos)
    rng.shuffle(flags)
    return [make_record(i, pos, spec, rng) for i, pos in enumerate(flags)]


def cue_count(text: str) -> int:
    """Occurrences of the planted cue words; used as an independent check."""
    words = [w.strip(".,;:[]()").lower() for w in text.split()]
    cues = {"however", "questioned", "question", "not", "no", "disputed", "challenged"}
    return sum(w in cues for w in words)
