"""
Deterministic synthetic publication corpus.

Records are drawn around a latent topic (one of the SDGs the bundled query
bank covers, or no SDG at all). Topic records either state their subject in
the wording the bank's queries look for, or only in looser vocabulary the
queries miss, which leaves room for the classifier to add assignments.
Journals carry ASJC codes and records cite earlier records, so subject,
source and citation features all have something to act on.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .common import ConfigurationError
from .corpus import Corpus, PublicationRecord
from .evaluation import ValidationDataset, ValidationItem

log = logging.getLogger(__name__)

NO_TOPIC = 0


@dataclass(frozen=True)
class Topic:
    """Vocabulary pools for one latent topic."""

    titles: tuple[str, ...]
    explicit: tuple[str, ...]
    implicit: tuple[str, ...]
    keywords: tuple[str, ...]
    loose_keywords: tuple[str, ...]
    journals: tuple[tuple[str, tuple[int, ...]], ...]


TOPICS: dict[int, Topic] = {
    1: Topic(
        titles=(
            "Poverty alleviation through rural credit in {place}",
            "Microfinance and household welfare in {place}",
            "Measuring multidimensional poverty in {place}",
            "A new poverty line for {place}",
            "Cash transfers and child outcomes in {place}",
        ),
        explicit=(
            "This study evaluates poverty alleviation programmes in {place}.",
            "Microfinance institutions expanded credit to rural clients.",
            "Conditional cash transfers raised school enrolment among poor households.",
            "Social protection schemes reduced the incidence of extreme poverty.",
            "Policies aimed at reducing poverty are assessed with household survey data.",
        ),
        implicit=(
            "Low income households face volatile earnings in the informal sector.",
            "Livelihood diversification supports vulnerable households.",
            "Income inequality widened across rural districts of {place}.",
            "Savings groups help families smooth consumption.",
        ),
        keywords=("poverty alleviation", "microfinance", "cash transfers", "social protection"),
        loose_keywords=("livelihoods", "informal sector", "household income", "inequality"),
        journals=(
            ("World Development", (3303, 2002)),
            ("Journal of Development Economics", (2002,)),
            ("Journal of Microfinance Studies", (2003, 1408)),
        ),
    ),
    2: Topic(
        titles=(
            "Food security under price shocks in {place}",
            "Determinants of malnutrition among children in {place}",
            "Sustainable agriculture and rural livelihoods",
            "Smallholder farming systems in {place}",
        ),
        explicit=(
            "Household food insecurity was measured with the experience scale.",
            "Child stunting and undernutrition remain prevalent in {place}.",
            "Sustainable agriculture practices improved soil organic matter.",
            "Smallholder farmers adopted drought tolerant seed.",
            "Crop yields increased by a third after irrigation was introduced.",
        ),
        implicit=(
            "Dietary diversity scores were low among rural children.",
            "Fertilizer subsidies changed planting decisions.",
            "Grain reserves buffer seasonal price spikes.",
            "Irrigation schemes extended the growing season in {place}.",
        ),
        keywords=("food security", "malnutrition", "sustainable agriculture", "crop yields"),
        loose_keywords=("dietary diversity", "irrigation", "fertilizer", "grain markets"),
        journals=(
            ("Food Policy", (1106, 2002)),
            ("Field Crops Research", (1102, 1111)),
            ("Global Food Security", (1106, 2308)),
        ),
    ),
    3: Topic(
        titles=(
            "Maternal health services in {place}",
            "Malaria control in {place}",
            "HIV/AIDS treatment adherence among adolescents",
            "Towards universal health coverage in {place}",
        ),
        explicit=(
            "Maternal mortality declined after skilled birth attendance expanded.",
            "Malaria incidence fell following bed net distribution.",
            "Tuberculosis treatment outcomes were tracked for two years.",
            "Progress towards universal health coverage was uneven in {place}.",
            "Health insurance improved access to primary care.",
        ),
        implicit=(
            "Antenatal visits increased in district hospitals.",
            "Community health workers delivered home visits.",
            "Immunisation coverage was measured by card review.",
            "Out of pocket expenditure burdened patients in {place}.",
        ),
        keywords=("maternal health", "malaria", "vaccination", "tuberculosis", "HIV/AIDS"),
        loose_keywords=("antenatal care", "community health workers", "immunisation", "primary care"),
        journals=(
            ("The Lancet Global Health", (2739,)),
            ("Vaccine", (2725, 2404)),
            ("BMC Public Health", (2739,)),
        ),
    ),
    5: Topic(
        titles=(
            "Gender gap in wages in {place}",
            "Female leadership in corporate boards",
            "Women empowerment and household decisions",
            "Domestic violence and help seeking in {place}",
        ),
        explicit=(
            "Gender equality in pay remains elusive.",
            "The gender gap in labour force participation narrowed.",
            "Domestic violence reports increased during lockdowns.",
            "Programmes for women's empowerment combined credit and training.",
            "Violence against women is underreported in {place}.",
        ),
        implicit=(
            "Female labour supply responds to childcare costs.",
            "Intra-household bargaining shapes spending.",
            "Girls' secondary schooling raised age at marriage in {place}.",
            "Unpaid care work falls mostly on mothers.",
        ),
        keywords=("gender equality", "domestic violence", "women empowerment", "gender gap"),
        loose_keywords=("childcare", "bargaining", "care work", "female labour"),
        journals=(
            ("Gender, Work and Organization", (3312, 1407)),
            ("Violence Against Women", (3312, 3207)),
            ("Feminist Economics", (2002, 3318)),
        ),
    ),
    6: Topic(
        titles=(
            "Drinking water quality in rural {place}",
            "Sanitation behaviour change in {place}",
            "Wastewater treatment with constructed wetlands",
            "Water scarcity and groundwater depletion",
        ),
        explicit=(
            "Access to safe drinking water improved in informal settlements.",
            "Sanitation coverage rose while open defecation declined.",
            "Wastewater is treated in constructed wetlands.",
            "Water scarcity threatens irrigation in {place}.",
            "Seasonal water stress affects urban supply.",
        ),
        implicit=(
            "Handwashing stations were installed in schools.",
            "Groundwater tables declined by two metres in {place}.",
            "Latrine usage was verified by spot checks.",
            "Chlorine dispensers were placed at water points.",
        ),
        keywords=("drinking water", "sanitation", "wastewater treatment", "water scarcity"),
        loose_keywords=("hygiene", "groundwater", "latrines", "chlorination"),
        journals=(
            ("Water Research", (2311, 2305)),
            ("Journal of Water, Sanitation and Hygiene for Development", (2311, 2739)),
            ("Water Resources Management", (2312, 2305)),
        ),
    ),
    7: Topic(
        titles=(
            "Renewable energy transitions in {place}",
            "Energy efficiency of residential buildings",
            "Energy access and rural enterprise in {place}",
            "Clean cooking adoption in {place}",
        ),
        explicit=(
            "Renewable energy deployment accelerated after feed-in tariffs.",
            "Solar photovoltaic mini-grids serve remote villages.",
            "Rural electrification raised evening study hours.",
            "Energy efficiency standards cut household demand.",
            "Wind power capacity doubled in five years.",
        ),
        implicit=(
            "Biomass fuel use dominates in rural kitchens.",
            "Battery storage smooths intermittent supply.",
            "Electricity tariffs were reformed in {place}.",
            "Grid extension costs rise with distance.",
        ),
        keywords=("renewable energy", "energy efficiency", "clean cooking", "cookstoves", "energy access"),
        loose_keywords=("mini-grids", "biomass", "electricity tariffs", "battery storage"),
        journals=(
            ("Energy Policy", (2100, 2300)),
            ("Renewable Energy", (2105,)),
            ("Energy for Sustainable Development", (2100, 2308)),
        ),
    ),
    13: Topic(
        titles=(
            "Climate change adaptation in coastal {place}",
            "Greenhouse gas emissions from agriculture",
            "Climate policy and carbon pricing",
            "Extreme weather and crop losses",
        ),
        explicit=(
            "Farmers pursued climate change adaptation strategies.",
            "Greenhouse gas emissions from transport were inventoried.",
            "Carbon mitigation pathways were compared.",
            "Heatwaves increased hospital admissions in {place}.",
            "National commitments under the Paris Agreement are reviewed.",
        ),
        implicit=(
            "Drought frequency increased over three decades.",
            "Sea level rise threatens deltas in {place}.",
            "Carbon pricing revenue was recycled.",
            "Resilience planning engaged local communities.",
        ),
        keywords=("climate change adaptation", "greenhouse gas emissions", "climate policy", "extreme weather"),
        loose_keywords=("drought", "sea level rise", "resilience", "carbon pricing"),
        journals=(
            ("Climate Policy", (2306, 3322)),
            ("Global Environmental Change", (2306, 2308)),
            ("Nature Climate Change", (2306,)),
        ),
    ),
    14: Topic(
        titles=(
            "Ocean acidification and shellfish",
            "Marine pollution from microplastics",
            "Overfishing in coastal waters of {place}",
            "Coral reef resilience",
        ),
        explicit=(
            "Ocean acidification reduces shell growth.",
            "Overfishing depleted demersal stocks.",
            "Marine plastic debris accumulates on beaches.",
            "Sustainable fish stocks require catch limits.",
            "Coral reef cover declined after bleaching.",
        ),
        implicit=(
            "Mangrove loss exposes coastlines in {place}.",
            "Bycatch of turtles was recorded by observers.",
            "Seagrass meadows store carbon.",
            "Marine protected areas restrict trawling.",
        ),
        keywords=("ocean acidification", "overfishing", "coral reefs", "marine pollution"),
        loose_keywords=("mangroves", "seagrass", "bycatch", "marine protected areas"),
        journals=(
            ("Marine Policy", (1104, 3312)),
            ("Marine Pollution Bulletin", (1104, 1910, 2310)),
            ("Coral Reefs", (1104, 1910)),
        ),
    ),
}

# Records without an SDG; several sentences sit close to query wording
# without satisfying it.
UNRELATED = Topic(
    titles=(
        "Quantum transport in graphene nanoribbons",
        "Galaxy morphology with deep learning",
        "Catalytic hydrogenation of nitroarenes",
        "Microwave synthesis of plastic composites",
        "Energy levels of colloidal quantum dots",
    ),
    explicit=(),
    implicit=(
        "We study carbon nanotube growth under microwave heating.",
        "Water molecules adsorb on the catalyst surface.",
        "The energy levels of the quantum dot are computed.",
        "A deep learning model classifies galaxy images.",
        "The climate chamber kept humidity constant.",
        "The poverty of available data limits the analysis.",
        "Plastic deformation of marine grade steel is measured.",
        "Women with gestational diabetes were enrolled in the trial.",
    ),
    keywords=(),
    loose_keywords=("graphene", "deep learning", "catalysis", "quantum dots", "microwave heating"),
    journals=(
        ("Physical Review B", (3104,)),
        ("Journal of Applied Physics", (3101,)),
        ("The Astrophysical Journal", (3103,)),
        ("Journal of Organic Chemistry", (1605,)),
        ("Medical Hypotheses", (2700,)),
    ),
)

GENERAL_JOURNALS: tuple[tuple[str, tuple[int, ...]], ...] = (
    ("PLOS ONE", (1000,)),
    ("Sustainability", (2308, 2105, 3305)),
)

FILLER = (
    "Data were collected from {n} respondents across {place}.",
    "Results indicate a significant association with regional income.",
    "We discuss implications for policy and practice.",
    "A mixed-methods design combined surveys and interviews.",
    "Panel regressions control for regional fixed effects.",
    "The sample covers the period from 2010 to 2020.",
)

PLACES = (
    "Kenya", "Bangladesh", "Peru", "India", "Ghana", "Vietnam",
    "Brazil", "Nepal", "Indonesia", "Ethiopia", "Mexico", "the Philippines",
)

COURSE_RATE = 0.02


@dataclass
class SyntheticCorpus:
    """
    A generated corpus and its latent topics.

    Attributes:
        corpus: The records
        topics: record id -> SDGs the record was written about (empty for
            unrelated records)
    """

    corpus: Corpus
    topics: dict[str, frozenset[int]] = field(default_factory=dict)


class _Writer:
    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def pick(self, seq: Sequence):
        return seq[int(self.rng.integers(len(seq)))]

    def some(self, seq: Sequence, lo: int, hi: int) -> list:
        k = min(len(seq), int(self.rng.integers(lo, hi + 1)))
        return [seq[i] for i in sorted(self.rng.choice(len(seq), size=k, replace=False))]

    def fill(self, template: str) -> str:
        return template.format(place=self.pick(PLACES), n=int(self.rng.integers(80, 2000)))


def _record(
    w: _Writer, rid: str, topic: int, secondary: int | None, explicit: bool
) -> PublicationRecord:
    t = TOPICS.get(topic, UNRELATED)
    sentences: list[str] = []
    keywords: list[str] = []

    if topic == NO_TOPIC:
        title = w.pick(t.titles)
    elif explicit:
        title = w.fill(w.pick(t.titles)) if w.rng.random() < 0.5 else w.fill(
            w.pick(t.implicit)
        ).rstrip(".")
        sentences += w.some(t.explicit, 1, 2)
        keywords += w.some(t.keywords, 1, 2)
    else:
        title = w.fill(w.pick(t.implicit)).rstrip(".")
    sentences += w.some(t.implicit, 1, 2)
    keywords += w.some(t.loose_keywords, 1, 2)
    if secondary is not None:
        s = TOPICS[secondary]
        sentences.append(w.pick(s.explicit))
        keywords.append(w.pick(s.keywords))
    sentences += w.some(FILLER, 1, 2)

    order = w.rng.permutation(len(sentences))
    abstract = " ".join(w.fill(sentences[i]) for i in order)

    if topic != NO_TOPIC and w.rng.random() < COURSE_RATE:
        return PublicationRecord(
            id=rid, title=title, abstract=abstract, author_keywords=tuple(keywords)
        )

    pool = t.journals if topic == NO_TOPIC or w.rng.random() < 0.8 else GENERAL_JOURNALS
    journal, codes = w.pick(pool)
    fulltext = None
    if w.rng.random() < 0.3:
        fulltext = tuple(sorted({tok for kw in keywords for tok in kw.lower().split()}))
    return PublicationRecord(
        id=rid,
        title=title,
        abstract=abstract,
        author_keywords=tuple(keywords),
        journal_name=journal,
        asjc_codes=codes,
        fulltext_terms=fulltext,
        year=int(w.rng.integers(2012, 2023)),
    )


def generate_corpus(
    n_records: int = 1200,
    seed: int = 7,
    unrelated_share: float = 0.3,
    explicit_share: float = 0.7,
) -> SyntheticCorpus:
    """
    Generate a reproducible corpus.

    Args:
        n_records: Number of records
        seed: Generator seed; equal seeds give identical corpora
        unrelated_share: Share of records without any SDG
        explicit_share: Share of topic records worded the way queries expect

    Raises:
        ConfigurationError: On n_records < 1 or shares outside [0, 1]
    """
    if n_records < 1:
        raise ConfigurationError("n_records must be >= 1")
    for name, value in (("unrelated_share", unrelated_share), ("explicit_share", explicit_share)):
        if not 0.0 <= value <= 1.0:
            raise ConfigurationError(f"{name} must lie in [0, 1]")

    rng = np.random.default_rng(seed)
    w = _Writer(rng)
    sdgs = sorted(TOPICS)
    records: list[PublicationRecord] = []
    topics: dict[str, frozenset[int]] = {}
    by_topic: dict[int, list[str]] = {t: [] for t in [NO_TOPIC, *sdgs]}
    width = max(5, len(str(n_records)))

    for i in range(n_records):
        rid = f"SYN{i:0{width}d}"
        topic = NO_TOPIC if rng.random() < unrelated_share else w.pick(sdgs)
        explicit = topic != NO_TOPIC and rng.random() < explicit_share
        secondary = None
        if topic != NO_TOPIC and rng.random() < 0.12:
            secondary = w.pick([s for s in sdgs if s != topic])

        record = _record(w, rid, topic, secondary, explicit)

        # cite earlier records, mostly within the same topic
        n_refs = int(rng.integers(0, 5))
        refs: set[str] = set()
        for _ in range(n_refs):
            same = by_topic[topic]
            pool = same if same and rng.random() < 0.7 else [r.id for r in records]
            if pool:
                refs.add(w.pick(pool))
        if refs and record.year is not None:
            record = replace(record, references=tuple(sorted(refs)))

        records.append(record)
        by_topic[topic].append(rid)
        gold = set() if topic == NO_TOPIC else {topic}
        if secondary is not None:
            gold.add(secondary)
        topics[rid] = frozenset(gold)

    log.info("[synth] records=%d seed=%d", n_records, seed)
    return SyntheticCorpus(Corpus.from_records(records), topics)


def generate_validation(
    synthetic: SyntheticCorpus,
    name: str = "synthetic",
    size: int | None = 300,
    seed: int = 0,
) -> ValidationDataset:
    """
    Gold-labelled dataset drawn from the topic records of a synthetic corpus.

    Args:
        synthetic: Output of generate_corpus
        name: Dataset name
        size: Number of items (None or larger than available: all of them)
        seed: Sampling seed
    """
    labelled = [rid for rid in synthetic.corpus.ids if synthetic.topics.get(rid)]
    if size is not None and size < len(labelled):
        rng = np.random.default_rng(seed)
        picked = sorted(rng.choice(len(labelled), size=size, replace=False))
        labelled = [labelled[i] for i in picked]
    items = tuple(
        ValidationItem(rid, synthetic.topics[rid], synthetic.corpus[rid]) for rid in labelled
    )
    return ValidationDataset(name, items, any(len(i.gold) > 1 for i in items))


def write_validation(dataset: ValidationDataset, path: str | Path) -> None:
    """Write items as full records with a `gold` list (bare references when no record)."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for item in dataset.items:
            obj = item.record.to_dict() if item.record is not None else {"id": item.record_id}
            obj["gold"] = sorted(item.gold)
            f.write(json.dumps(obj, ensure_ascii=False) + "\n")
