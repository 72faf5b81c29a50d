#!/usr/bin/env python3
"""Regenerate the dataset fixtures under tests/fixtures/.

Spans are computed with str.find so the character offsets in the dialogue
files are correct by construction. Run from the repository root:

    python scripts/make_fixtures.py
"""

from __future__ import annotations

import json
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "tests" / "fixtures"


def spans(utterance: str, *pairs: tuple[str, str]) -> list[dict]:
    """(slot, surface) pairs -> MultiWOZ-style span annotations."""
    out = []
    for slot, surface in pairs:
        start = utterance.find(surface)
        if start < 0:
            raise ValueError(f"{surface!r} not found in {utterance!r}")
        out.append({"slot": slot, "value": surface, "start": start,
                    "exclusive_end": start + len(surface)})
    return out


def user_turn(utterance: str, frames: dict[str, dict], active: str,
              requested: dict[str, list[str]] | None = None) -> dict:
    """frames: domain -> cumulative slot_values (bare slot names)."""
    requested = requested or {}
    frame_list = []
    for domain, slot_values in frames.items():
        frame_list.append({
            "service": domain,
            "state": {
                "active_intent": f"find_{domain}" if domain == active else "NONE",
                "requested_slots": [f"{domain}-{s}" for s in
                                    requested.get(domain, [])],
                "slot_values": {f"{domain}-{slot}": [value]
                                for slot, value in slot_values.items()},
            },
            "slots": [],
        })
    return {"speaker": "USER", "utterance": utterance, "frames": frame_list}


def system_turn(utterance: str, span_list: list[dict] | None = None,
                service: str = "") -> dict:
    return {"speaker": "SYSTEM", "utterance": utterance,
            "frames": [{"service": service, "slots": span_list or []}]}


# --------------------------------------------------------------------------
# MultiWOZ fixture
# --------------------------------------------------------------------------

def multiwoz_schema() -> list[dict]:
    def slot(name, description, values=None):
        record = {"name": name, "description": description,
                  "is_categorical": values is not None}
        if values is not None:
            record["possible_values"] = values
        return record

    # Order matters: it is the choice list of the domain detection prompt.
    return [
        {
            "service_name": "restaurant",
            "description": (
                "The user can ask for a restaurant by name, area, food type, "
                "or price.\n"
                "There is also a number of restaurant in the database "
                "currently corresponding to the user's request.\n"
                "If you find a restaurant, provide [restaurant_name], "
                "[restaurant_address], [restaurant_phone] or "
                "[restaurant_postcode]"),
            "slots": [
                slot("restaurant-food", "the type of food served"),
                slot("restaurant-pricerange", "the price of the restaurant",
                     ["cheap", "moderate", "expensive"]),
                slot("restaurant-area",
                     "the area where the restaurant is located "
                     "(north/east/west/south/centre)",
                     ["north", "east", "west", "south", "centre"]),
                slot("restaurant-name", "the name of the restaurant"),
                slot("restaurant-bookday", "day of the restaurant booking",
                     ["monday", "tuesday", "wednesday", "thursday", "friday",
                      "saturday", "sunday"]),
                slot("restaurant-bookpeople", "number of people for the table",
                     ["1", "2", "3", "4", "5", "6", "7", "8"]),
                slot("restaurant-booktime", "time of the restaurant booking"),
            ],
        },
        {
            "service_name": "hotel",
            "description": (
                "The user can ask for a hotel by name, area, parking, "
                "internet availability, or price.\n"
                "There is also a number of hotel in the database currently "
                "corresponding to the user's request.\n"
                "If you find a hotel, provide [hotel_name], [hotel_address], "
                "[hotel_phone] or [hotel_postcode]"),
            "slots": [
                slot("hotel-pricerange", "the price of the hotel",
                     ["cheap", "moderate", "expensive"]),
                slot("hotel-area",
                     "the area where the hotel is located "
                     "(north/east/west/south/centre)",
                     ["north", "east", "west", "south", "centre"]),
                slot("hotel-internet",
                     "whether the hotel has internet (yes/no)", ["yes", "no"]),
                slot("hotel-parking",
                     "whether the hotel has parking (yes/no)", ["yes", "no"]),
                slot("hotel-stars",
                     "the number of stars the hotel has (1/2/3/4/5)",
                     ["1", "2", "3", "4", "5"]),
                slot("hotel-type",
                     "the type of the hotel (hotel/bed and breakfast/guest house)",
                     ["hotel", "bed and breakfast", "guest house"]),
                slot("hotel-name", "the name of the hotel"),
                slot("hotel-bookday", "day of the hotel booking",
                     ["monday", "tuesday", "wednesday", "thursday", "friday",
                      "saturday", "sunday"]),
                slot("hotel-bookpeople",
                     "number of people staying at the hotel",
                     ["1", "2", "3", "4", "5", "6", "7", "8"]),
                slot("hotel-bookstay", "length of the stay in nights",
                     ["1", "2", "3", "4", "5", "6", "7", "8"]),
            ],
        },
        {
            "service_name": "attraction",
            "description": (
                "The user can ask for an attraction by name, area, or type.\n"
                "There is also a number of attraction in the database "
                "currently corresponding to the user's request.\n"
                "If you find an attraction, provide [attraction_name], "
                "[attraction_address], [attraction_phone] or "
                "[attraction_entrancefee]"),
            "slots": [
                slot("attraction-type",
                     "the type of the attraction (museum/park/theatre/college)",
                     ["museum", "park", "theatre", "college"]),
                slot("attraction-area",
                     "the area where the attraction is located "
                     "(north/east/west/south/centre)",
                     ["north", "east", "west", "south", "centre"]),
                slot("attraction-name", "the name of the attraction"),
            ],
        },
        {
            "service_name": "taxi",
            "description": (
                "The user can book a taxi by providing departure, destination "
                "and a time.\n"
                "If you book a taxi, provide [taxi_type], [taxi_color] and "
                "[taxi_phone]"),
            "slots": [
                slot("taxi-departure", "the pick-up place of the taxi"),
                slot("taxi-destination", "the drop-off place of the taxi"),
                slot("taxi-leaveat", "the pick-up time"),
                slot("taxi-arriveby", "the latest arrival time"),
            ],
        },
        {
            "service_name": "train",
            "description": (
                "The user can ask for a train by departure, destination, day, "
                "departure time or arrival time.\n"
                "There is also a number of train in the database currently "
                "corresponding to the user's request.\n"
                "If you find a train, provide [train_trainid], [train_price] "
                "or [train_duration]"),
            "slots": [
                slot("train-departure", "the departure station of the train"),
                slot("train-destination", "the destination station of the train"),
                slot("train-day", "the day of the journey",
                     ["monday", "tuesday", "wednesday", "thursday", "friday",
                      "saturday", "sunday"]),
                slot("train-leaveat", "the earliest departure time"),
                slot("train-arriveby", "the latest arrival time"),
                slot("train-bookpeople", "number of tickets to book",
                     ["1", "2", "3", "4", "5", "6", "7", "8"]),
            ],
        },
    ]


def multiwoz_db() -> dict[str, list[dict]]:
    return {
        "hotel": [
            {"name": "alpha guest house", "pricerange": "cheap",
             "area": "north", "internet": "yes", "parking": "yes",
             "stars": "4", "type": "guest house",
             "address": "12 alpha road", "phone": "01223358966",
             "postcode": "cb41jy"},
            {"name": "beta hotel", "pricerange": "cheap", "area": "centre",
             "internet": "no", "parking": "no", "stars": "2", "type": "hotel",
             "address": "5 beta street", "phone": "01223351241",
             "postcode": "cb21aq"},
            {"name": "gamma lodge", "pricerange": "moderate", "area": "north",
             "internet": "yes", "parking": "yes", "stars": "3",
             "type": "guest house", "address": "63 gamma avenue",
             "phone": "01223312843", "postcode": "cb43px"},
            {"name": "delta grand", "pricerange": "expensive",
             "area": "centre", "internet": "yes", "parking": "yes",
             "stars": "5", "type": "hotel", "address": "1 delta square",
             "phone": "01223366611", "postcode": "cb11ly"},
            {"name": "epsilon house", "pricerange": "cheap", "area": "east",
             "internet": "yes", "parking": "no", "stars": "4",
             "type": "guest house", "address": "82 epsilon lane",
             "phone": "01223525725", "postcode": "cb58hy"},
            {"name": "zeta inn", "pricerange": "moderate", "area": "west",
             "internet": "no", "parking": "yes", "stars": "3", "type": "hotel",
             "address": "37 zeta way", "phone": "01223353888",
             "postcode": "cb30nd"},
        ],
        "restaurant": [
            {"name": "golden wok", "food": "chinese", "pricerange": "cheap",
             "area": "centre", "address": "19 market street",
             "phone": "01223367755", "postcode": "cb23ar"},
            {"name": "casa roma", "food": "italian", "pricerange": "moderate",
             "area": "south", "address": "44 hills road",
             "phone": "01223462354", "postcode": "cb28pe"},
            {"name": "spice garden", "food": "indian",
             "pricerange": "expensive", "area": "centre",
             "address": "31 bridge street", "phone": "01223328899",
             "postcode": "cb21uw"},
            {"name": "river thai", "food": "thai", "pricerange": "moderate",
             "area": "west", "address": "8 mill lane",
             "phone": "01223364917", "postcode": "cb39ey"},
            {"name": "blue lagoon", "food": "seafood",
             "pricerange": "expensive", "area": "east",
             "address": "2 harbour walk", "phone": "01223302010",
             "postcode": "cb58paz"},
        ],
        "attraction": [
            {"name": "county museum", "type": "museum", "area": "centre",
             "entrancefee": "free", "address": "7 castle street",
             "phone": "01223314609", "postcode": "cb30aq"},
            {"name": "abbey gardens", "type": "park", "area": "east",
             "entrancefee": "free", "address": "abbey road",
             "phone": "01223336265", "postcode": "cb58bs"},
            {"name": "grand theatre", "type": "theatre", "area": "centre",
             "entrancefee": "10 pounds", "address": "25 regent terrace",
             "phone": "01223503333", "postcode": "cb21dp"},
            {"name": "science centre", "type": "museum", "area": "west",
             "entrancefee": "5 pounds", "address": "14 science road",
             "phone": "01223748840", "postcode": "cb30fa"},
        ],
        "train": [
            {"trainid": "TR1234", "departure": "cambridge",
             "destination": "london", "day": "monday", "leaveat": "09:00",
             "arriveby": "10:30", "price": "20 pounds", "duration": "90 minutes"},
            {"trainid": "TR2468", "departure": "cambridge",
             "destination": "london", "day": "monday", "leaveat": "11:00",
             "arriveby": "12:30", "price": "20 pounds", "duration": "90 minutes"},
            {"trainid": "TR3691", "departure": "london",
             "destination": "cambridge", "day": "tuesday", "leaveat": "08:15",
             "arriveby": "09:45", "price": "15 pounds", "duration": "90 minutes"},
            {"trainid": "TR5013", "departure": "cambridge",
             "destination": "ely", "day": "wednesday", "leaveat": "14:00",
             "arriveby": "14:40", "price": "5 pounds", "duration": "40 minutes"},
            {"trainid": "TR7777", "departure": "ely",
             "destination": "cambridge", "day": "friday", "leaveat": "16:10",
             "arriveby": "16:50", "price": "5 pounds", "duration": "40 minutes"},
        ],
        "taxi": [
            {"type": "toyota", "color": "white", "phone": "07218068540"},
            {"type": "skoda", "color": "black", "phone": "07519877218"},
            {"type": "bmw", "color": "grey", "phone": "07239644669"},
        ],
    }


def multiwoz_dialogues() -> list[dict]:
    dialogues = []

    # MUL001: hotel search -> refine -> book (single domain).
    s1 = "We have 3 cheap hotels available. Do you have a preference about the area?"
    s2 = ("Alpha Guest House is a cheap guest house in the north with free "
          "parking. Would you like to book it?")
    s3 = "Booking was successful. Your reference number is QX4T7P9C."
    dialogues.append({
        "dialogue_id": "MUL001",
        "services": ["hotel"],
        "turns": [
            user_turn("I want a cheap place to stay.",
                      {"hotel": {"pricerange": "cheap"}}, "hotel"),
            system_turn(s1, spans(s1, ("hotel-choice", "3")), "hotel"),
            user_turn("I would prefer the north, with free parking.",
                      {"hotel": {"pricerange": "cheap", "area": "north",
                                 "parking": "yes"}}, "hotel"),
            system_turn(s2, spans(
                s2, ("hotel-name", "Alpha Guest House"),
                ("hotel-pricerange", "cheap"),
                ("hotel-type", "guest house"),
                ("hotel-area", "north")), "hotel"),
            user_turn("Yes, book it for 2 people for 3 nights from monday.",
                      {"hotel": {"pricerange": "cheap", "area": "north",
                                 "parking": "yes", "bookpeople": "2",
                                 "bookstay": "3", "bookday": "monday"}},
                      "hotel"),
            system_turn(s3, spans(s3, ("reference", "QX4T7P9C")), "hotel"),
        ],
    })

    # MUL002: hotel info requests.
    s1 = ("Delta Grand is a lovely 5 star hotel in the centre. Do you need "
          "anything else?")
    s2 = "The phone number is 01223366611 and the postcode is cb11ly."
    dialogues.append({
        "dialogue_id": "MUL002",
        "services": ["hotel"],
        "turns": [
            user_turn("I am looking for an expensive hotel in the centre.",
                      {"hotel": {"pricerange": "expensive", "area": "centre"}},
                      "hotel"),
            system_turn(s1, spans(
                s1, ("hotel-name", "Delta Grand"), ("hotel-stars", "5"),
                ("hotel-area", "centre")), "hotel"),
            user_turn("What is their phone number and postcode?",
                      {"hotel": {"pricerange": "expensive", "area": "centre"}},
                      "hotel", requested={"hotel": ["phone", "postcode"]}),
            system_turn(s2, spans(
                s2, ("hotel-phone", "01223366611"),
                ("hotel-postcode", "cb11ly")), "hotel"),
        ],
    })

    # MUL003: restaurant search and booking; second system turn exercises
    # the span-free delexicalization fallback.
    s1 = ("There is 1 cheap restaurant in the centre. It is called "
          "Golden Wok.")
    s2 = "Golden Wok serves chinese food."
    s3 = "Your table is booked. The reference number is 7HGSXA2B."
    dialogues.append({
        "dialogue_id": "MUL003",
        "services": ["restaurant"],
        "turns": [
            user_turn("I need a cheap place to eat in the centre.",
                      {"restaurant": {"pricerange": "cheap", "area": "centre"}},
                      "restaurant"),
            system_turn(s1, spans(
                s1, ("restaurant-choice", "1"),
                ("restaurant-pricerange", "cheap"),
                ("restaurant-area", "centre"),
                ("restaurant-name", "Golden Wok")), "restaurant"),
            user_turn("What kind of food do they serve?",
                      {"restaurant": {"pricerange": "cheap", "area": "centre"}},
                      "restaurant", requested={"restaurant": ["food"]}),
            system_turn(s2, None, "restaurant"),
            user_turn("Great, book a table for 4 on friday at 18:00.",
                      {"restaurant": {"pricerange": "cheap", "area": "centre",
                                      "bookpeople": "4", "bookday": "friday",
                                      "booktime": "18:00"}}, "restaurant"),
            system_turn(s3, spans(s3, ("reference", "7HGSXA2B")), "restaurant"),
        ],
    })

    # MUL004: restaurant; requested address never provided (success negative).
    s1 = "Spice Garden is an expensive indian restaurant in the centre."
    s2 = "It is in the centre of town."
    dialogues.append({
        "dialogue_id": "MUL004",
        "services": ["restaurant"],
        "turns": [
            user_turn("Is there an expensive indian restaurant somewhere in town?",
                      {"restaurant": {"food": "indian",
                                      "pricerange": "expensive"}},
                      "restaurant"),
            system_turn(s1, spans(
                s1, ("restaurant-name", "Spice Garden"),
                ("restaurant-pricerange", "expensive"),
                ("restaurant-food", "indian"),
                ("restaurant-area", "centre")), "restaurant"),
            user_turn("What is the address?",
                      {"restaurant": {"food": "indian",
                                      "pricerange": "expensive"}},
                      "restaurant", requested={"restaurant": ["address"]}),
            system_turn(s2, spans(s2, ("restaurant-area", "centre")),
                        "restaurant"),
        ],
    })

    # MUL005: attraction with address request.
    s1 = "Science Centre is a museum in the west. The entrance fee is 5 pounds."
    s2 = "Their address is 14 science road."
    dialogues.append({
        "dialogue_id": "MUL005",
        "services": ["attraction"],
        "turns": [
            user_turn("I want to visit a museum in the west.",
                      {"attraction": {"type": "museum", "area": "west"}},
                      "attraction"),
            system_turn(s1, spans(
                s1, ("attraction-name", "Science Centre"),
                ("attraction-type", "museum"), ("attraction-area", "west"),
                ("attraction-entrancefee", "5 pounds")), "attraction"),
            user_turn("What is their address?",
                      {"attraction": {"type": "museum", "area": "west"}},
                      "attraction", requested={"attraction": ["address"]}),
            system_turn(s2, spans(s2, ("attraction-address",
                                       "14 science road")), "attraction"),
        ],
    })

    # MUL006: attraction, phone request.
    s1 = "Abbey Gardens is a free park in the east."
    s2 = "Sure, it is 01223336265."
    dialogues.append({
        "dialogue_id": "MUL006",
        "services": ["attraction"],
        "turns": [
            user_turn("Are there any free parks in the east?",
                      {"attraction": {"type": "park", "area": "east"}},
                      "attraction"),
            system_turn(s1, spans(
                s1, ("attraction-name", "Abbey Gardens"),
                ("attraction-entrancefee", "free"),
                ("attraction-type", "park"),
                ("attraction-area", "east")), "attraction"),
            user_turn("Can I get the phone number?",
                      {"attraction": {"type": "park", "area": "east"}},
                      "attraction", requested={"attraction": ["phone"]}),
            system_turn(s2, spans(s2, ("attraction-phone", "01223336265")),
                        "attraction"),
        ],
    })

    # MUL007: train search, refine, book.
    s1 = ("There are 2 trains from cambridge to london on monday. When would "
          "you like to leave?")
    s2 = "TR2468 leaves at 11:00 and arrives by 12:30. Would that work?"
    s3 = "Booked! Your reference number is TRN82K4Q."
    dialogues.append({
        "dialogue_id": "MUL007",
        "services": ["train"],
        "turns": [
            user_turn("I need a train from cambridge to london on monday.",
                      {"train": {"departure": "cambridge",
                                 "destination": "london", "day": "monday"}},
                      "train"),
            system_turn(s1, spans(
                s1, ("train-choice", "2"), ("train-departure", "cambridge"),
                ("train-destination", "london"), ("train-day", "monday")),
                "train"),
            user_turn("I want to leave after 10:30.",
                      {"train": {"departure": "cambridge",
                                 "destination": "london", "day": "monday",
                                 "leaveat": "10:30"}}, "train"),
            system_turn(s2, spans(
                s2, ("train-trainid", "TR2468"), ("train-leaveat", "11:00"),
                ("train-arriveby", "12:30")), "train"),
            user_turn("Book it for 2 people please.",
                      {"train": {"departure": "cambridge",
                                 "destination": "london", "day": "monday",
                                 "leaveat": "10:30", "bookpeople": "2"}},
                      "train"),
            system_turn(s3, spans(s3, ("reference", "TRN82K4Q")), "train"),
        ],
    })

    # MUL008: train price request.
    s1 = "TR3691 leaves london at 08:15 on tuesday. Does that suit you?"
    s2 = "It costs 15 pounds."
    dialogues.append({
        "dialogue_id": "MUL008",
        "services": ["train"],
        "turns": [
            user_turn("I need a train to cambridge from london on tuesday.",
                      {"train": {"departure": "london",
                                 "destination": "cambridge",
                                 "day": "tuesday"}}, "train"),
            system_turn(s1, spans(
                s1, ("train-trainid", "TR3691"),
                ("train-departure", "london"), ("train-leaveat", "08:15"),
                ("train-day", "tuesday")), "train"),
            user_turn("What is the price?",
                      {"train": {"departure": "london",
                                 "destination": "cambridge",
                                 "day": "tuesday"}}, "train",
                      requested={"train": ["price"]}),
            system_turn(s2, spans(s2, ("train-price", "15 pounds")), "train"),
        ],
    })

    # MUL009: taxi booking between fixture venues.
    s1 = "What time would you like to leave?"
    s2 = ("Booked. A white toyota will pick you up, the contact number "
          "is 07218068540.")
    dialogues.append({
        "dialogue_id": "MUL009",
        "services": ["taxi"],
        "turns": [
            user_turn("I need a taxi from the county museum to alpha guest house.",
                      {"taxi": {"departure": "county museum",
                                "destination": "alpha guest house"}}, "taxi"),
            system_turn(s1, None, "taxi"),
            user_turn("I want to leave at 19:00.",
                      {"taxi": {"departure": "county museum",
                                "destination": "alpha guest house",
                                "leaveat": "19:00"}}, "taxi"),
            system_turn(s2, spans(
                s2, ("taxi-color", "white"), ("taxi-type", "toyota"),
                ("taxi-phone", "07218068540")), "taxi"),
        ],
    })

    # MUL010: taxi with arrival constraint.
    s1 = "Where will you be departing from?"
    s2 = "A black skoda is booked for you. The driver's number is 07519877218."
    dialogues.append({
        "dialogue_id": "MUL010",
        "services": ["taxi"],
        "turns": [
            user_turn("Can you arrange a taxi to the grand theatre? I need to "
                      "arrive by 17:15.",
                      {"taxi": {"destination": "grand theatre",
                                "arriveby": "17:15"}}, "taxi"),
            system_turn(s1, None, "taxi"),
            user_turn("From zeta inn.",
                      {"taxi": {"destination": "grand theatre",
                                "arriveby": "17:15",
                                "departure": "zeta inn"}}, "taxi"),
            system_turn(s2, spans(
                s2, ("taxi-color", "black"), ("taxi-type", "skoda"),
                ("taxi-phone", "07519877218")), "taxi"),
        ],
    })

    # MUL011: hotel + taxi (multi-domain; excluded from the context store).
    s1 = ("Gamma Lodge is a moderate 3 star guest house in the north. Want me "
          "to book it?")
    s2 = "Done! Your reference number is GMLX29AH."
    s3 = "What time do you want to leave?"
    s4 = ("A grey bmw will pick you up at gamma lodge. The contact number "
          "is 07239644669.")
    hotel_full = {"pricerange": "moderate", "area": "north",
                  "type": "guest house", "bookstay": "2", "bookpeople": "1",
                  "bookday": "wednesday"}
    dialogues.append({
        "dialogue_id": "MUL011",
        "services": ["hotel", "taxi"],
        "turns": [
            user_turn("I am looking for a moderate guest house in the north.",
                      {"hotel": {"pricerange": "moderate", "area": "north",
                                 "type": "guest house"}}, "hotel"),
            system_turn(s1, spans(
                s1, ("hotel-name", "Gamma Lodge"),
                ("hotel-pricerange", "moderate"), ("hotel-stars", "3"),
                ("hotel-type", "guest house"), ("hotel-area", "north")),
                "hotel"),
            user_turn("Yes, for 2 nights for 1 person starting wednesday.",
                      {"hotel": hotel_full}, "hotel"),
            system_turn(s2, spans(s2, ("reference", "GMLX29AH")), "hotel"),
            user_turn("I also need a taxi from the hotel to the county museum.",
                      {"hotel": hotel_full,
                       "taxi": {"departure": "gamma lodge",
                                "destination": "county museum"}}, "taxi"),
            system_turn(s3, None, "taxi"),
            user_turn("At 13:30.",
                      {"hotel": hotel_full,
                       "taxi": {"departure": "gamma lodge",
                                "destination": "county museum",
                                "leaveat": "13:30"}}, "taxi"),
            system_turn(s4, spans(
                s4, ("taxi-color", "grey"), ("taxi-type", "bmw"),
                ("taxi-departure", "gamma lodge"),
                ("taxi-phone", "07239644669")), "taxi"),
        ],
    })

    # MUL012: restaurant + attraction; attraction request fails.
    s1 = "River Thai is a moderate thai restaurant in the west. Anything else?"
    s2 = "The Grand Theatre is in the centre."
    s3 = "I am not sure about the fee, sorry."
    rest_state = {"food": "thai", "pricerange": "moderate", "area": "west"}
    attr_state = {"type": "theatre", "area": "centre"}
    dialogues.append({
        "dialogue_id": "MUL012",
        "services": ["restaurant", "attraction"],
        "turns": [
            user_turn("I want a moderate thai restaurant in the west.",
                      {"restaurant": rest_state}, "restaurant"),
            system_turn(s1, spans(
                s1, ("restaurant-name", "River Thai"),
                ("restaurant-pricerange", "moderate"),
                ("restaurant-food", "thai"),
                ("restaurant-area", "west")), "restaurant"),
            user_turn("Yes, I am also looking for a theatre in the centre.",
                      {"restaurant": rest_state, "attraction": attr_state},
                      "attraction"),
            system_turn(s2, spans(
                s2, ("attraction-name", "Grand Theatre"),
                ("attraction-area", "centre")), "attraction"),
            user_turn("What is the entrance fee for the theatre?",
                      {"restaurant": rest_state, "attraction": attr_state},
                      "attraction",
                      requested={"attraction": ["entrancefee"]}),
            system_turn(s3, None, "attraction"),
        ],
    })

    return dialogues


def multiwoz_goals() -> dict[str, dict]:
    return {
        "MUL001": {
            "hotel": {"info": {"pricerange": "cheap", "area": "north",
                               "parking": "yes"},
                      "reqt": [],
                      "book": {"people": "2", "stay": "3", "day": "monday"}},
            "message": ("You are looking for a cheap place to stay in the "
                        "north with free parking. Book it for 2 people, "
                        "3 nights from monday."),
        },
        "MUL002": {
            "hotel": {"info": {"pricerange": "expensive", "area": "centre"},
                      "reqt": ["phone", "postcode"], "book": {}},
            "message": ("You want an expensive hotel in the centre. Get its "
                        "phone number and postcode."),
        },
        "MUL003": {
            "restaurant": {"info": {"pricerange": "cheap", "area": "centre"},
                           "reqt": ["food"],
                           "book": {"people": "4", "day": "friday",
                                    "time": "18:00"}},
            "message": ("Find a cheap restaurant in the centre, ask what food "
                        "they serve and book a table for 4 on friday at 18:00."),
        },
        "MUL004": {
            "restaurant": {"info": {"food": "indian",
                                    "pricerange": "expensive"},
                           "reqt": ["address"], "book": {}},
            "message": ("You want an expensive indian restaurant and its "
                        "address."),
        },
        "MUL005": {
            "attraction": {"info": {"type": "museum", "area": "west"},
                           "reqt": ["address"], "book": {}},
            "message": "Visit a museum in the west; get the address.",
        },
        "MUL006": {
            "attraction": {"info": {"type": "park", "area": "east"},
                           "reqt": ["phone"], "book": {}},
            "message": "Find a park in the east and get the phone number.",
        },
        "MUL007": {
            "train": {"info": {"departure": "cambridge",
                               "destination": "london", "day": "monday",
                               "leaveat": "10:30"},
                      "reqt": [], "book": {"people": "2"}},
            "message": ("Book a train from cambridge to london on monday "
                        "leaving after 10:30 for 2 people."),
        },
        "MUL008": {
            "train": {"info": {"departure": "london",
                               "destination": "cambridge", "day": "tuesday"},
                      "reqt": ["price"], "book": {}},
            "message": ("Find a train from london to cambridge on tuesday and "
                        "ask for the price."),
        },
        "MUL009": {
            "taxi": {"info": {"departure": "county museum",
                              "destination": "alpha guest house",
                              "leaveat": "19:00"},
                     "reqt": [], "book": {}},
            "message": ("Book a taxi from the county museum to alpha guest "
                        "house leaving at 19:00."),
        },
        "MUL010": {
            "taxi": {"info": {"destination": "grand theatre",
                              "arriveby": "17:15", "departure": "zeta inn"},
                     "reqt": [], "book": {}},
            "message": ("Book a taxi from zeta inn to the grand theatre "
                        "arriving by 17:15."),
        },
        "MUL011": {
            "hotel": {"info": {"pricerange": "moderate", "area": "north",
                               "type": "guest house"},
                      "reqt": [],
                      "book": {"people": "1", "stay": "2",
                               "day": "wednesday"}},
            "taxi": {"info": {"departure": "gamma lodge",
                              "destination": "county museum",
                              "leaveat": "13:30"},
                     "reqt": [], "book": {}},
            "message": ("Book a moderate guest house in the north for 1 "
                        "person, 2 nights from wednesday, then a taxi to the "
                        "county museum at 13:30."),
        },
        "MUL012": {
            "restaurant": {"info": {"food": "thai", "pricerange": "moderate",
                                    "area": "west"},
                           "reqt": [], "book": {}},
            "attraction": {"info": {"type": "theatre", "area": "centre"},
                           "reqt": ["entrancefee"], "book": {}},
            "message": ("Find a moderate thai restaurant in the west and a "
                        "theatre in the centre; ask for the entrance fee."),
        },
    }


# --------------------------------------------------------------------------
# SGD fixture
# --------------------------------------------------------------------------

def sgd_user_turn(service: str, utterance: str, slot_values: dict[str, str],
                  active: bool = True, requested: list[str] | None = None) -> dict:
    return {"speaker": "USER", "utterance": utterance, "frames": [{
        "service": service,
        "state": {
            "active_intent": "find" if active else "NONE",
            "requested_slots": requested or [],
            "slot_values": {k: [v] for k, v in slot_values.items()},
        },
        "slots": [],
    }]}


def sgd_system_turn(service: str, utterance: str,
                    span_list: list[dict] | None = None,
                    results: list[dict] | None = None) -> dict:
    frame = {"service": service, "slots": span_list or []}
    if results is not None:
        frame["service_results"] = results
        frame["service_call"] = {"method": "find", "parameters": {}}
    return {"speaker": "SYSTEM", "utterance": utterance, "frames": [frame]}


def sgd_schema() -> list[dict]:
    def slot(name, description, values=None):
        record = {"name": name, "description": description,
                  "is_categorical": values is not None}
        if values is not None:
            record["possible_values"] = values
        return record

    return [
        {
            "service_name": "Restaurants_1",
            "description": ("The user is looking for a restaurant and may "
                            "ask for its address or phone number."),
            "slots": [
                slot("cuisine", "the cuisine of the restaurant",
                     ["italian", "chinese", "indian", "thai"]),
                slot("city", "the city where the restaurant is located"),
                slot("price_range", "the price range of the restaurant",
                     ["cheap", "moderate", "expensive"]),
                slot("restaurant_name", "the name of the restaurant"),
                slot("party_size", "number of seats to reserve",
                     ["1", "2", "3", "4", "5", "6"]),
                slot("date", "the date of the reservation"),
                slot("time", "the time of the reservation"),
                slot("street_address", "the address of the restaurant"),
                slot("phone_number", "the phone number of the restaurant"),
            ],
        },
        {
            "service_name": "Hotels_2",
            "description": ("The user is looking for a hotel to stay at and "
                            "may ask for details about it."),
            "slots": [
                slot("where_to", "the city of the hotel"),
                slot("number_of_adults", "how many adults are staying",
                     ["1", "2", "3", "4"]),
                slot("check_in_date", "the check-in date"),
                slot("hotel_name", "the name of the hotel"),
                slot("phone_number", "the phone number of the hotel"),
            ],
        },
        {
            "service_name": "Media_1",
            "description": ("The user wants to find a movie to watch online "
                            "and may ask who stars in it."),
            "slots": [
                slot("genre", "the genre of the movie",
                     ["comedy", "drama", "action"]),
                slot("title", "the title of the movie"),
                slot("subtitles", "whether to show subtitles", ["yes", "no"]),
                slot("starring", "an actor starring in the movie"),
            ],
        },
    ]


def sgd_dialogues() -> list[dict]:
    dialogues = []

    s1 = "I found Bella Napoli, a nice italian place in San Jose."
    s2 = "The address is 25 olive street and the phone number is 4085551901."
    dialogues.append({
        "dialogue_id": "SGD1001",
        "services": ["Restaurants_1"],
        "turns": [
            sgd_user_turn("Restaurants_1",
                          "Find me an italian restaurant in San Jose.",
                          {"cuisine": "italian", "city": "san jose"}),
            sgd_system_turn("Restaurants_1", s1, spans(
                s1, ("restaurant_name", "Bella Napoli"),
                ("cuisine", "italian"), ("city", "San Jose")),
                results=[
                    {"restaurant_name": "bella napoli", "cuisine": "italian",
                     "city": "san jose", "price_range": "moderate",
                     "street_address": "25 olive street",
                     "phone_number": "4085551901"},
                    {"restaurant_name": "trattoria uno", "cuisine": "italian",
                     "city": "san jose", "price_range": "expensive",
                     "street_address": "4 vine avenue",
                     "phone_number": "4085552277"},
                ]),
            sgd_user_turn("Restaurants_1",
                          "Sounds good. What is the address and phone number?",
                          {"cuisine": "italian", "city": "san jose",
                           "restaurant_name": "bella napoli"},
                          requested=["street_address", "phone_number"]),
            sgd_system_turn("Restaurants_1", s2, spans(
                s2, ("street_address", "25 olive street"),
                ("phone_number", "4085551901"))),
        ],
    })

    s1 = "How about Dragon Palace? It is a cheap chinese restaurant in Oakland."
    s2 = "Your table for 2 is reserved for friday at 19:00."
    dialogues.append({
        "dialogue_id": "SGD1002",
        "services": ["Restaurants_1"],
        "turns": [
            sgd_user_turn("Restaurants_1",
                          "I want cheap chinese food in Oakland.",
                          {"cuisine": "chinese", "city": "oakland",
                           "price_range": "cheap"}),
            sgd_system_turn("Restaurants_1", s1, spans(
                s1, ("restaurant_name", "Dragon Palace"),
                ("price_range", "cheap"), ("cuisine", "chinese"),
                ("city", "Oakland")),
                results=[
                    {"restaurant_name": "dragon palace", "cuisine": "chinese",
                     "city": "oakland", "price_range": "cheap",
                     "street_address": "11 pearl road",
                     "phone_number": "5105550111"},
                ]),
            sgd_user_turn("Restaurants_1",
                          "Reserve a table for 2 on friday at 19:00.",
                          {"cuisine": "chinese", "city": "oakland",
                           "price_range": "cheap",
                           "restaurant_name": "dragon palace",
                           "party_size": "2", "date": "friday",
                           "time": "19:00"},
                          requested=["street_address"]),
            sgd_system_turn("Restaurants_1", s2, spans(
                s2, ("party_size", "2"), ("date", "friday"),
                ("time", "19:00"))),
        ],
    })

    s1 = "I found the Harbor Inn in Seattle for 2 adults checking in march 14th."
    s2 = "The phone number is 2065550123."
    dialogues.append({
        "dialogue_id": "SGD2001",
        "services": ["Hotels_2"],
        "turns": [
            sgd_user_turn("Hotels_2",
                          "I need a hotel in Seattle for 2 adults from march 14th.",
                          {"where_to": "seattle", "number_of_adults": "2",
                           "check_in_date": "march 14th"}),
            sgd_system_turn("Hotels_2", s1, spans(
                s1, ("hotel_name", "Harbor Inn"), ("where_to", "Seattle"),
                ("number_of_adults", "2"), ("check_in_date", "march 14th")),
                results=[
                    {"hotel_name": "harbor inn", "where_to": "seattle",
                     "phone_number": "2065550123"},
                ]),
            sgd_user_turn("Hotels_2", "Great, what is their phone number?",
                          {"where_to": "seattle", "number_of_adults": "2",
                           "check_in_date": "march 14th",
                           "hotel_name": "harbor inn"},
                          requested=["phone_number"]),
            sgd_system_turn("Hotels_2", s2, spans(
                s2, ("phone_number", "2065550123"))),
        ],
    })

    s1 = "The Cedar Lodge in Denver is available. Want me to book it?"
    s2 = "Booked for 1 adult checking in on april 2nd."
    dialogues.append({
        "dialogue_id": "SGD2002",
        "services": ["Hotels_2"],
        "turns": [
            sgd_user_turn("Hotels_2", "Find a hotel in Denver, please.",
                          {"where_to": "denver"},
                          requested=["hotel_name"]),
            sgd_system_turn("Hotels_2", s1, spans(
                s1, ("hotel_name", "Cedar Lodge"), ("where_to", "Denver")),
                results=[
                    {"hotel_name": "cedar lodge", "where_to": "denver",
                     "phone_number": "3035550177"},
                ]),
            sgd_user_turn("Hotels_2",
                          "Yes, for 1 adult checking in on april 2nd.",
                          {"where_to": "denver", "hotel_name": "cedar lodge",
                           "number_of_adults": "1",
                           "check_in_date": "april 2nd"}),
            sgd_system_turn("Hotels_2", s2, spans(
                s2, ("number_of_adults", "1"),
                ("check_in_date", "april 2nd"))),
        ],
    })

    s1 = "I found Laugh Riot, a comedy you can watch online."
    s2 = "It stars Maya Reed. Enjoy the movie!"
    dialogues.append({
        "dialogue_id": "SGD3001",
        "services": ["Media_1"],
        "turns": [
            sgd_user_turn("Media_1", "Find me a comedy to watch online.",
                          {"genre": "comedy"}),
            sgd_system_turn("Media_1", s1, spans(
                s1, ("title", "Laugh Riot"), ("genre", "comedy")),
                results=[
                    {"title": "laugh riot", "genre": "comedy",
                     "starring": "maya reed"},
                ]),
            sgd_user_turn("Media_1", "Who stars in it?",
                          {"genre": "comedy", "title": "laugh riot"},
                          requested=["starring"]),
            sgd_system_turn("Media_1", s2, spans(
                s2, ("starring", "Maya Reed"))),
        ],
    })

    s1 = "Dark Harbor is a great drama. Should I play it with subtitles?"
    s2 = "Playing Dark Harbor with subtitles now."
    dialogues.append({
        "dialogue_id": "SGD3002",
        "services": ["Media_1"],
        "turns": [
            sgd_user_turn("Media_1", "I am in the mood for a drama tonight.",
                          {"genre": "drama"}, requested=["title"]),
            sgd_system_turn("Media_1", s1, spans(
                s1, ("title", "Dark Harbor"), ("genre", "drama")),
                results=[
                    {"title": "dark harbor", "genre": "drama",
                     "starring": "john cole"},
                ]),
            sgd_user_turn("Media_1", "Yes, play it with subtitles.",
                          {"genre": "drama", "title": "dark harbor",
                           "subtitles": "yes"}),
            sgd_system_turn("Media_1", s2, spans(
                s2, ("title", "Dark Harbor"))),
        ],
    })

    return dialogues


def write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n")


def main() -> None:
    mwz = FIXTURES / "multiwoz"
    write_json(mwz / "schema.json", multiwoz_schema())
    write_json(mwz / "goals.json", multiwoz_goals())
    for domain, rows in multiwoz_db().items():
        write_json(mwz / "db" / f"{domain}_db.json", rows)
    write_json(mwz / "train" / "dialogues_001.json", multiwoz_dialogues())

    sgd = FIXTURES / "sgd"
    write_json(sgd / "train" / "schema.json", sgd_schema())
    write_json(sgd / "train" / "dialogues_001.json", sgd_dialogues())
    print(f"fixtures written under {FIXTURES}")


if __name__ == "__main__":
    main()
