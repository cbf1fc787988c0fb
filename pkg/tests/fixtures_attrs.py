"""Hand-computed attributed trees for every production of the seed grammar.

Each fixture: (token values, {index: modality override}, expected tree).
Expected trees are written out literally as (symbol, production_id, attrs,
children); leaf attrs list the matched terminal's values with the actual
token modality. Sets of modalities appear as sets of strings; roles and
cooperation types as their names. Nothing here is derived by the evaluator
under test.
"""

from __future__ import annotations

SP = {"speech"}
GE = {"gesture"}
SPGE = {"speech", "gesture"}


def leaf(name, val, mod, synrole, coop=None):
    attrs = {"val": val, "mod": set(mod), "synrole": synrole}
    if coop:
        attrs["coop"] = coop
    return (name, None, attrs, [])


def node(symbol, pid, attrs, children):
    return (symbol, pid, attrs, children)


def _vtn(verb_pid, verb_name, verb_val, noun_pid, noun_name, noun_val,
         noun_mod=SP, noun_coop=None):
    """Expected tree for 'verb this noun': S(P2) VP(P4) [VERBT, NP(P5)[DT, NOUN]]."""
    sentence_mod = set(SP) | set(noun_mod)
    noun_attrs = {"val": noun_val, "mod": set(noun_mod), "synrole": "noun"}
    if noun_coop:
        noun_attrs["coop"] = noun_coop
    return node(
        "S", "P2", {"val": f"{verb_val} {noun_val}", "mod": sentence_mod},
        [node(
            "VP", "P4", {"val": f"{verb_val} {noun_val}", "mod": sentence_mod},
            [
                node("VERBT", verb_pid, {"val": verb_val, "mod": set(SP), "synrole": "verb"},
                     [leaf(verb_name, verb_val, SP, "verb")]),
                node(
                    "NP", "P5", {"val": noun_val, "mod": set(SP) | set(noun_mod)},
                    [
                        node("DT", "P11",
                             {"val": "this", "mod": set(SP), "synrole": "deictic",
                              "coop": "complementary"},
                             [leaf("This", "this", SP, "deictic", "complementary")]),
                        node("NOUN", noun_pid, dict(noun_attrs),
                             [leaf(noun_name, noun_val, noun_mod, "noun", noun_coop)]),
                    ],
                ),
            ],
        )],
    )


ATTRIBUTE_FIXTURES = [
    # P1 + P13
    (
        ("help",), {},
        node("S", "P1", {"val": "help", "mod": set(SP)},
             [node("NOUN", "P13", {"val": "help", "mod": set(SP), "synrole": "noun"},
                   [leaf("Help", "help", SP, "noun")])]),
    ),
    # P2 + P3 + P9
    (
        ("recall",), {},
        node("S", "P2", {"val": "recall", "mod": set(SP)},
             [node("VP", "P3", {"val": "recall", "mod": set(SP)},
                   [node("VERBT", "P9", {"val": "recall", "mod": set(SP), "synrole": "verb"},
                         [leaf("Recall", "recall", SP, "verb")])])]),
    ),
    # P4 + P5 + P11 + P12 + P17
    (("play", "this", "song"), {},
     _vtn("P12", "Play", "play", "P17", "Song", "song")),
    # P6: bare-noun noun phrase
    (
        ("play", "song"), {},
        node("S", "P2", {"val": "play song", "mod": set(SP)},
             [node("VP", "P4", {"val": "play song", "mod": set(SP)},
                   [
                       node("VERBT", "P12", {"val": "play", "mod": set(SP), "synrole": "verb"},
                            [leaf("Play", "play", SP, "verb")]),
                       node("NP", "P6", {"val": "song", "mod": set(SP)},
                            [node("NOUN", "P17",
                                  {"val": "song", "mod": set(SP), "synrole": "noun"},
                                  [leaf("Song", "song", SP, "noun")])]),
                   ])]),
    ),
    # P7 + P19
    (("save", "this", "station"), {},
     _vtn("P7", "Save", "save", "P19", "Station", "station")),
    # P8 + P14 (Person carries coop = complementary)
    (("call", "this", "person"), {},
     _vtn("P8", "Call", "call", "P14", "Person", "person", noun_coop="complementary")),
    # P10 + P16
    (("delete", "this", "phone-book"), {},
     _vtn("P10", "Delete", "delete", "P16", "Phone-book", "phone-book")),
    # P20 + P22
    (("turn off", "this", "defrost"), {},
     _vtn("P20", "Turn off", "turn off", "P22", "Defrost", "defrost")),
    # P26 + P21
    (("turn on", "this", "temperature"), {},
     _vtn("P26", "Turn on", "turn on", "P21", "Temperature", "temperature")),
    # P25 + P15
    (("read", "this", "number"), {},
     _vtn("P25", "Read", "read", "P15", "Number", "number")),
    # P24 + P18
    (("repeat", "this", "cd"), {},
     _vtn("P24", "Repeat", "repeat", "P18", "CD", "cd")),
    # P23
    (("play", "this", "usb"), {},
     _vtn("P12", "Play", "play", "P23", "USB", "usb")),
    # gesture-delivered noun: leaf mod is the actual modality, unions upward
    (("play", "this", "song"), {2: "gesture"},
     _vtn("P12", "Play", "play", "P17", "Song", "song", noun_mod=GE)),
]
