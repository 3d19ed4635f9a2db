"""Build the bundled mini restaurant corpus.

Fifty training reviews over four first-level categories (FOOD, SERVICE,
AMBIENCE, DRINKS), written in the rambling register of real review text:
each sentence circles its topic two or three times across clauses, so the
domain word repeats while one concrete aspect noun varies.  That repetition
gives the bag-of-words features a sharply clustered shape, which is what
the latent category model is meant to pick up.  All four explicit/implicit
combinations appear and every sentence carries several quadruples.

Output format is the tab-separated review layout: the sentence, then one
field per quadruple holding "aspect_span category#subcategory
sentiment_index opinion_span", spans as start,end word offsets with the end
exclusive and -1,-1 meaning implicit.  Sentiment indices: 0 negative, 1
neutral, 2 positive.

Usage: python3 make_mini_dataset.py [--out DIR]
"""

import argparse
import os

NEG, NEU, POS = 0, 1, 2

# domain -> marker word heading every clause about it
MARKER = {
    "FOOD": "food",
    "SERVICE": "service",
    "AMBIENCE": "ambience",
    "DRINKS": "drinks",
}

# compound aspect noun -> (domain, subcategory); reads as "the <marker> <noun>"
NOUNS = {
    "portions": ("FOOD", "QUALITY"), "plating": ("FOOD", "QUALITY"),
    "seasoning": ("FOOD", "QUALITY"), "menu": ("FOOD", "VARIETY"),
    "specials": ("FOOD", "VARIETY"), "sides": ("FOOD", "VARIETY"),
    "staff": ("SERVICE", "GENERAL"), "team": ("SERVICE", "GENERAL"),
    "manager": ("SERVICE", "GENERAL"), "hostess": ("SERVICE", "GENERAL"),
    "line": ("SERVICE", "SPEED"), "counter": ("SERVICE", "SPEED"),
    "lighting": ("AMBIENCE", "GENERAL"), "seating": ("AMBIENCE", "GENERAL"),
    "layout": ("AMBIENCE", "GENERAL"), "music": ("AMBIENCE", "NOISE"),
    "speakers": ("AMBIENCE", "NOISE"), "crowd": ("AMBIENCE", "NOISE"),
    "wine": ("DRINKS", "QUALITY"), "coffee": ("DRINKS", "QUALITY"),
    "ice": ("DRINKS", "QUALITY"), "pours": ("DRINKS", "QUALITY"),
    "refills": ("DRINKS", "PRICES"), "round": ("DRINKS", "PRICES"),
}

POLARITY = {
    "tasty": POS, "fresh": POS, "rich": POS, "generous": POS, "great": POS,
    "bland": NEG, "stale": NEG, "greasy": NEG, "cold": NEG, "heavy": NEG,
    "friendly": POS, "attentive": POS, "warm": POS, "helpful": POS,
    "rude": NEG, "slow": NEG, "dismissive": NEG, "careless": NEG,
    "quick": POS, "cozy": POS, "charming": POS, "calm": POS, "lovely": POS,
    "loud": NEG, "cramped": NEG, "dated": NEG, "harsh": NEG, "buzzing": NEG,
    "smooth": POS, "crisp": POS, "balanced": POS, "fair": POS,
    "flat": NEG, "watery": NEG, "steep": NEG, "bitter": NEG, "thin": NEG,
    "chaotic": NEG, "pricey": NEG,
    "okay": NEU, "average": NEU, "ordinary": NEU, "plain": NEU,
    "fine": NEU, "standard": NEU, "passable": NEU,
}

# default subcategory for quads whose aspect is the bare domain word
BARE_C2 = {"FOOD": "QUALITY", "SERVICE": "GENERAL",
           "AMBIENCE": "GENERAL", "DRINKS": "QUALITY"}

# opinions that pin a more specific subcategory on the bare domain word
OPINION_C2 = {("SERVICE", "slow"): "SPEED", ("SERVICE", "quick"): "SPEED",
              ("AMBIENCE", "loud"): "NOISE", ("AMBIENCE", "calm"): "NOISE",
              ("AMBIENCE", "buzzing"): "NOISE"}


def _c2_for(domain, op):
    return OPINION_C2.get((domain, op), BARE_C2[domain])


def mk(domain, verb, op):
    """the MARKER VERB OP -- bare-marker aspect, explicit opinion."""
    words = ["the", MARKER[domain], verb, op]
    quad = ((1, 2), domain, _c2_for(domain, op), POLARITY[op], (3, 4))
    return words, [quad]


def mkout(domain, op):
    """the MARKER came out OP"""
    words = ["the", MARKER[domain], "came", "out", op]
    quad = ((1, 2), domain, _c2_for(domain, op), POLARITY[op], (4, 5))
    return words, [quad]


def nn(noun, verb, op):
    """the MARKER NOUN VERB OP -- compound aspect span."""
    domain, c2 = NOUNS[noun]
    words = ["the", MARKER[domain], noun, verb, op]
    return words, [((1, 3), domain, c2, POLARITY[op], (4, 5))]


def nnout(noun, op):
    """the MARKER NOUN came out OP"""
    domain, c2 = NOUNS[noun]
    words = ["the", MARKER[domain], noun, "came", "out", op]
    return words, [((1, 3), domain, c2, POLARITY[op], (5, 6))]


def imp(domain, op, lead="honestly"):
    """LEAD just OP -- implicit aspect, explicit opinion."""
    words = [lead, "just", op]
    quad = (None, domain, _c2_for(domain, op), POLARITY[op], (2, 3))
    return words, [quad]


def cost(noun, amount, sent=NEG):
    """the MARKER NOUN cost AMOUNT -- explicit aspect, implicit opinion."""
    domain, _ = NOUNS[noun]
    words = ["the", MARKER[domain], noun, "cost", amount]
    return words, [((1, 3), domain, "PRICES", sent, None)]


def never(noun, tail):
    """the MARKER NOUN never TAIL -- explicit aspect, implicit opinion."""
    domain, c2 = NOUNS[noun]
    words = ["the", MARKER[domain], noun, "never", tail]
    return words, [((1, 3), domain, c2, NEG, None)]


def waited():
    """nothing for 40 minutes -- both spans implicit."""
    return ["nothing", "for", "40", "minutes"], [
        (None, "SERVICE", "SPEED", NEG, None)
    ]


def allgood(domain):
    """everything else just worked -- both spans implicit, positive."""
    return ["everything", "else", "just", "worked"], [
        (None, domain, BARE_C2[domain], POS, None)
    ]


def sentence(clauses, conj="and"):
    """Join clause fragments into one review sentence with absolute spans."""
    tokens, quads = [], []
    for i, (words, rel_quads) in enumerate(clauses):
        if i > 0:
            tokens.append(",")
            if i == len(clauses) - 1:
                tokens.append(conj)
        base = len(tokens)
        tokens.extend(words)
        for a, c1, c2, s, o in rel_quads:
            a_abs = (a[0] + base, a[1] + base) if a else None
            o_abs = (o[0] + base, o[1] + base) if o else None
            quads.append((a_abs, c1, c2, s, o_abs))
    tokens.append(".")
    return tokens, quads


TRAIN = [
    # FOOD: 13 sentences
    sentence([mk("FOOD", "was", "tasty"), mk("FOOD", "felt", "fresh"),
              nn("portions", "looked", "generous")]),
    sentence([mk("FOOD", "was", "bland"), mk("FOOD", "felt", "greasy"),
              nnout("portions", "cold")]),
    sentence([mk("FOOD", "seemed", "okay"), mk("FOOD", "stayed", "average"),
              nn("plating", "looked", "plain")]),
    sentence([nn("plating", "looked", "careless"), mk("FOOD", "felt", "heavy"),
              mk("FOOD", "was", "stale")]),
    sentence([mk("FOOD", "was", "rich"), nn("seasoning", "felt", "balanced"),
              mk("FOOD", "stayed", "warm")]),
    sentence([mk("FOOD", "felt", "flat"), nn("seasoning", "was", "harsh"),
              mkout("FOOD", "cold")]),
    sentence([mk("FOOD", "was", "great"), nn("menu", "felt", "fresh"),
              mk("FOOD", "stayed", "tasty")]),
    sentence([nn("menu", "seemed", "thin"), mk("FOOD", "was", "ordinary"),
              mk("FOOD", "felt", "plain")], conj="but"),
    sentence([mk("FOOD", "was", "fresh"), nn("specials", "felt", "rich"),
              mk("FOOD", "looked", "lovely")]),
    sentence([mk("FOOD", "felt", "stale"), nn("specials", "seemed", "dated"),
              mk("FOOD", "was", "heavy"), imp("FOOD", "bland")]),
    sentence([mk("FOOD", "was", "tasty"), nnout("sides", "warm"),
              mk("FOOD", "felt", "generous")]),
    sentence([nn("sides", "came", "cold"), mk("FOOD", "was", "greasy"),
              mk("FOOD", "felt", "heavy"), allgood("FOOD")], conj="but"),
    sentence([mk("FOOD", "seemed", "fine"), mk("FOOD", "stayed", "standard"),
              nn("portions", "felt", "passable")]),
    # SERVICE: 13 sentences
    sentence([mk("SERVICE", "was", "friendly"), mk("SERVICE", "felt", "warm"),
              nn("staff", "stayed", "attentive")]),
    sentence([mk("SERVICE", "was", "rude"), mk("SERVICE", "seemed", "careless"),
              nn("staff", "felt", "dismissive")]),
    sentence([mk("SERVICE", "was", "quick"), nn("team", "stayed", "helpful"),
              mk("SERVICE", "felt", "calm")]),
    sentence([nn("team", "seemed", "slow"), mk("SERVICE", "felt", "cold"),
              mk("SERVICE", "was", "dismissive")]),
    sentence([mk("SERVICE", "was", "fine"), nn("manager", "seemed", "standard"),
              mk("SERVICE", "stayed", "average")]),
    sentence([nn("manager", "was", "rude"), mk("SERVICE", "felt", "harsh"),
              mk("SERVICE", "seemed", "cold"), imp("SERVICE", "careless")]),
    sentence([mk("SERVICE", "was", "helpful"), nn("hostess", "stayed", "charming"),
              mk("SERVICE", "felt", "quick")]),
    sentence([nn("hostess", "seemed", "cold"), mk("SERVICE", "was", "slow"),
              mk("SERVICE", "felt", "careless"), waited()], conj="and"),
    sentence([mk("SERVICE", "felt", "attentive"), nn("line", "stayed", "quick"),
              mk("SERVICE", "seemed", "warm")]),
    sentence([never("line", "moved"), mk("SERVICE", "felt", "slow"),
              mk("SERVICE", "was", "chaotic")]),
    sentence([mk("SERVICE", "was", "passable"), nn("counter", "seemed", "fine"),
              mk("SERVICE", "stayed", "ordinary")]),
    sentence([nn("counter", "felt", "chaotic"), mk("SERVICE", "was", "careless"),
              mk("SERVICE", "seemed", "rude")]),
    sentence([mk("SERVICE", "stayed", "friendly"), mk("SERVICE", "was", "great"),
              nn("staff", "felt", "lovely")]),
    # AMBIENCE: 12 sentences
    sentence([mk("AMBIENCE", "was", "cozy"), mk("AMBIENCE", "felt", "calm"),
              nn("lighting", "stayed", "warm")]),
    sentence([mk("AMBIENCE", "was", "loud"), nn("lighting", "seemed", "harsh"),
              mk("AMBIENCE", "felt", "dated")]),
    sentence([mk("AMBIENCE", "felt", "charming"), nn("seating", "was", "generous"),
              mk("AMBIENCE", "stayed", "lovely")]),
    sentence([nn("seating", "felt", "cramped"), mk("AMBIENCE", "was", "harsh"),
              mk("AMBIENCE", "seemed", "cold")]),
    sentence([mk("AMBIENCE", "was", "ordinary"), nn("layout", "seemed", "plain"),
              mk("AMBIENCE", "felt", "passable")]),
    sentence([nn("layout", "felt", "dated"), mk("AMBIENCE", "was", "cramped"),
              mk("AMBIENCE", "seemed", "harsh"), imp("AMBIENCE", "loud", lead="overall")]),
    sentence([mk("AMBIENCE", "stayed", "calm"), nn("music", "felt", "smooth"),
              mk("AMBIENCE", "was", "charming")]),
    sentence([nn("music", "was", "loud"), mk("AMBIENCE", "felt", "buzzing"),
              mk("AMBIENCE", "seemed", "chaotic")]),
    sentence([mk("AMBIENCE", "was", "lovely"), nn("speakers", "stayed", "calm"),
              mk("AMBIENCE", "felt", "cozy"), allgood("AMBIENCE")]),
    sentence([nn("speakers", "felt", "buzzing"), mk("AMBIENCE", "was", "loud"),
              mk("AMBIENCE", "stayed", "harsh")]),
    sentence([mk("AMBIENCE", "seemed", "okay"), nn("crowd", "stayed", "average"),
              mk("AMBIENCE", "felt", "fine")]),
    sentence([nn("crowd", "was", "loud"), mk("AMBIENCE", "felt", "cramped"),
              mk("AMBIENCE", "seemed", "buzzing")]),
    # DRINKS: 12 sentences
    sentence([mk("DRINKS", "were", "smooth"), mk("DRINKS", "felt", "crisp"),
              nn("wine", "was", "balanced")]),
    sentence([mk("DRINKS", "were", "flat"), nn("wine", "felt", "bitter"),
              mk("DRINKS", "seemed", "watery")]),
    sentence([mk("DRINKS", "were", "great"), nn("coffee", "stayed", "rich"),
              mk("DRINKS", "felt", "warm")]),
    sentence([nn("coffee", "was", "bitter"), mk("DRINKS", "felt", "thin"),
              mkout("DRINKS", "cold")]),
    sentence([mk("DRINKS", "were", "okay"), nn("ice", "seemed", "fine"),
              mk("DRINKS", "stayed", "average")]),
    sentence([nn("ice", "felt", "stale"), mk("DRINKS", "were", "watery"),
              mk("DRINKS", "seemed", "thin"), imp("DRINKS", "flat", lead="overall")]),
    sentence([mk("DRINKS", "were", "crisp"), nn("pours", "looked", "generous"),
              mk("DRINKS", "felt", "smooth")]),
    sentence([nn("pours", "seemed", "thin"), mk("DRINKS", "were", "steep"),
              mk("DRINKS", "felt", "flat")], conj="but"),
    sentence([mk("DRINKS", "were", "balanced"), nn("refills", "stayed", "quick"),
              mk("DRINKS", "seemed", "fair")]),
    sentence([never("refills", "came"), mk("DRINKS", "were", "steep"),
              mk("DRINKS", "felt", "watery")]),
    sentence([cost("round", "40"), mk("DRINKS", "were", "thin"),
              mk("DRINKS", "felt", "pricey")]),
    sentence([mk("DRINKS", "were", "smooth"), cost("round", "12", sent=POS),
              mk("DRINKS", "stayed", "crisp")]),
]

DEV = [
    sentence([mk("FOOD", "was", "fresh"), mk("FOOD", "stayed", "rich"),
              nn("portions", "seemed", "generous")]),
    sentence([mk("FOOD", "felt", "greasy"), nn("menu", "seemed", "plain"),
              mk("FOOD", "was", "cold")]),
    sentence([mk("SERVICE", "was", "warm"), nn("team", "felt", "friendly"),
              mk("SERVICE", "stayed", "quick")]),
    sentence([mk("SERVICE", "seemed", "slow"), nn("counter", "was", "chaotic"),
              imp("SERVICE", "rude")]),
    sentence([mk("AMBIENCE", "was", "calm"), nn("layout", "felt", "charming"),
              mk("AMBIENCE", "stayed", "cozy")]),
    sentence([nn("crowd", "seemed", "loud"), mk("AMBIENCE", "was", "dated"),
              mk("AMBIENCE", "felt", "harsh")]),
    sentence([mk("DRINKS", "were", "rich"), nn("coffee", "felt", "smooth"),
              mk("DRINKS", "stayed", "warm")]),
    sentence([nn("refills", "seemed", "steep"), mk("DRINKS", "were", "bitter"),
              mk("DRINKS", "felt", "ordinary")], conj="but"),
]

TEST = [
    sentence([mk("FOOD", "was", "lovely"), nn("specials", "stayed", "fresh"),
              mk("FOOD", "felt", "rich")]),
    sentence([mk("FOOD", "seemed", "stale"), nn("sides", "felt", "heavy"),
              mk("FOOD", "was", "flat")]),
    sentence([mk("FOOD", "stayed", "plain"), nn("seasoning", "seemed", "average"),
              mk("FOOD", "was", "okay")]),
    sentence([mk("SERVICE", "felt", "charming"), nn("hostess", "was", "helpful"),
              mk("SERVICE", "stayed", "attentive")]),
    sentence([nn("manager", "seemed", "dismissive"), mk("SERVICE", "was", "cold"),
              waited()]),
    sentence([mk("SERVICE", "was", "ordinary"), nn("line", "seemed", "passable"),
              mk("SERVICE", "felt", "standard")]),
    sentence([mk("AMBIENCE", "felt", "lovely"), nn("music", "stayed", "calm"),
              mk("AMBIENCE", "was", "warm")]),
    sentence([nn("speakers", "were", "harsh"), mk("AMBIENCE", "felt", "loud"),
              imp("AMBIENCE", "cramped", lead="overall")]),
    sentence([mk("AMBIENCE", "seemed", "plain"), nn("seating", "was", "fine"),
              mk("AMBIENCE", "stayed", "okay")]),
    sentence([mk("DRINKS", "were", "fair"), nn("pours", "felt", "balanced"),
              mk("DRINKS", "stayed", "smooth")]),
    sentence([cost("round", "35"), mk("DRINKS", "were", "watery"),
              mk("DRINKS", "seemed", "flat")]),
    sentence([mk("DRINKS", "were", "passable"), nn("ice", "stayed", "okay"),
              mk("DRINKS", "felt", "plain")]),
]


def span_field(span):
    if span is None:
        return "-1,-1"
    return f"{span[0]},{span[1]}"


def to_line(tokens, quads):
    text = " ".join(tokens)
    fields = []
    for a, c1, c2, s, o in quads:
        fields.append(f"{span_field(a)} {c1}#{c2} {s} {span_field(o)}")
    return "\t".join([text] + fields)


def write_split(path, samples):
    lines = [to_line(tokens, quads) for tokens, quads in samples]
    assert len(set(lines)) == len(lines), "duplicate sentences in split"
    with open(path, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line + "\n")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=os.path.join(
        os.path.dirname(__file__), "..", "src", "quadgen", "data"))
    args = parser.parse_args()
    os.makedirs(args.out, exist_ok=True)
    for name, samples in (("mini_train.tsv", TRAIN), ("mini_dev.tsv", DEV),
                          ("mini_test.tsv", TEST)):
        write_split(os.path.join(args.out, name), samples)
        print(f"wrote {name}: {len(samples)} sentences, "
              f"{sum(len(q) for _, q in samples)} quadruples")


if __name__ == "__main__":
    main()
