//! Word lists for the synthetic benchmark. Verbs are `(lemma, past form)`.
//! PS-side entries carry their synonyms, which double as the surrogate
//! lexicon.

pub const CITIES: &[&str] = &[
    "Springfield", "Riverton", "Lakeview", "Fairmont", "Cedarville", "Brookhaven", "Millbrook", "Oakridge",
    "Ashland", "Greenfield", "Harborview", "Westfield", "Pinecrest", "Maplewood", "Clearwater", "Stonebridge",
    "Elmhurst", "Northvale", "Bayside", "Kingsport", "Hillcrest", "Redwood", "Silverton", "Eastwood",
    "Foxborough", "Glendale", "Marion", "Dover", "Salem", "Clinton",
];

pub const STREETS: &[&str] = &[
    "Main", "Oak", "Pine", "Maple", "Cedar", "Elm", "Walnut", "Chestnut", "Lake", "Hill", "Park", "Washington",
    "Lincoln", "Jefferson", "Madison", "Franklin", "Church", "Spring", "River", "Mill", "Center", "Union",
    "Market", "Broad", "Water", "High", "School", "Bridge", "Forest", "Meadow",
];

pub const FIRST_NAMES: &[&str] = &[
    "James", "Mary", "Robert", "Linda", "Michael", "Susan", "David", "Karen", "Daniel", "Nancy", "Paul",
    "Laura", "Mark", "Sarah", "Steven", "Emily", "Kevin", "Angela", "Brian", "Helen", "Jason", "Rachel",
    "Eric", "Megan", "Carlos", "Maria", "Andre", "Grace", "Omar", "Nina",
];

pub const LAST_NAMES: &[&str] = &[
    "Smith", "Johnson", "Williams", "Brown", "Jones", "Garcia", "Miller", "Davis", "Rodriguez", "Martinez",
    "Hernandez", "Lopez", "Wilson", "Anderson", "Thomas", "Taylor", "Moore", "Jackson", "Martin", "Lee",
    "Thompson", "White", "Harris", "Clark", "Lewis", "Walker", "Hall", "Young", "King", "Wright",
];

/// Nouns shared by every PS template.
pub const PS_NOUNS: &[(&str, &[&str])] = &[
    ("home", &["house", "residence"]),
    ("property", &["estate", "parcel"]),
    ("listing", &["offer", "posting"]),
    ("buyer", &["purchaser", "client"]),
    ("price", &["cost", "amount"]),
    ("market", &["economy", "sector"]),
    ("business", &["company", "firm"]),
    ("store", &["shop", "retailer"]),
    ("restaurant", &["diner", "eatery"]),
    ("school", &["academy", "campus"]),
    ("student", &["pupil", "learner"]),
    ("score", &["result", "grade"]),
    ("station", &["outlet", "depot"]),
    ("gas", &["fuel", "petrol"]),
    ("driver", &["motorist", "commuter"]),
    ("weather", &["climate", "forecast"]),
    ("temperature", &["reading", "heat"]),
    ("resident", &["citizen", "neighbor"]),
    ("area", &["region", "district"]),
    ("community", &["town", "neighborhood"]),
    ("job", &["position", "role"]),
    ("employer", &["company", "agency"]),
    ("event", &["gathering", "festival"]),
    ("visitor", &["guest", "tourist"]),
    ("deal", &["bargain", "agreement"]),
    ("option", &["choice", "alternative"]),
    ("bedroom", &["room", "chamber"]),
    ("kitchen", &["galley", "cookhouse"]),
    ("yard", &["garden", "lawn"]),
    ("report", &["study", "review"]),
    ("rating", &["ranking", "assessment"]),
    ("review", &["critique", "evaluation"]),
    ("team", &["squad", "crew"]),
    ("game", &["match", "contest"]),
    ("season", &["period", "year"]),
    ("crime", &["offense", "incident"]),
    ("officer", &["deputy", "official"]),
    ("permit", &["license", "approval"]),
    ("project", &["plan", "initiative"]),
    ("value", &["worth", "valuation"]),
];

pub const PS_VERBS: &[(&str, &str, &[&str])] = &[
    ("sell", "sold", &["trade", "transfer"]),
    ("list", "listed", &["post", "register"]),
    ("offer", "offered", &["provide", "present"]),
    ("feature", "featured", &["include", "contain"]),
    ("rank", "ranked", &["place", "position"]),
    ("earn", "earned", &["receive", "gain"]),
    ("open", "opened", &["launch", "start"]),
    ("host", "hosted", &["hold", "organize"]),
    ("report", "reported", &["note", "record"]),
    ("show", "showed", &["indicate", "reveal"]),
    ("reach", "reached", &["hit", "attain"]),
    ("attract", "attracted", &["draw", "bring"]),
    ("boast", "boasted", &["claim", "tout"]),
    ("serve", "served", &["support", "assist"]),
    ("win", "won", &["capture", "secure"]),
    ("post", "posted", &["publish", "issue"]),
    ("draw", "drew", &["pull", "gather"]),
    ("top", "topped", &["lead", "exceed"]),
    ("hire", "hired", &["recruit", "employ"]),
    ("welcome", "welcomed", &["greet", "receive"]),
];

/// Sensational attributive adjectives.
pub const PS_ADJS: &[(&str, &[&str])] = &[
    ("stunning", &["notable", "striking"]),
    ("spacious", &["large", "roomy"]),
    ("beautiful", &["pleasant", "attractive"]),
    ("popular", &["common", "familiar"]),
    ("affordable", &["modest", "reasonable"]),
    ("remarkable", &["unusual", "notable"]),
    ("charming", &["quaint", "pleasant"]),
    ("impressive", &["solid", "substantial"]),
    ("incredible", &["unusual", "surprising"]),
    ("gorgeous", &["attractive", "handsome"]),
    ("amazing", &["surprising", "unexpected"]),
    ("top", &["leading", "major"]),
    ("great", &["considerable", "significant"]),
    ("ideal", &["suitable", "appropriate"]),
    ("exciting", &["interesting", "lively"]),
    ("perfect", &["complete", "adequate"]),
    ("fantastic", &["unusual", "remarkable"]),
    ("excellent", &["strong", "capable"]),
    ("best", &["leading", "foremost"]),
    ("new", &["recent", "current"]),
];

pub const PS_ADVS: &[(&str, &[&str])] = &[
    ("recently", &["lately", "newly"]),
    ("currently", &["presently", "now"]),
    ("also", &["additionally", "likewise"]),
    ("now", &["presently", "currently"]),
];

pub const LN_NOUNS: &[&str] = &[
    "council", "budget", "ordinance", "meeting", "mayor", "commissioner", "board", "district", "tax", "levy",
    "road", "bridge", "contract", "vote", "proposal", "hearing", "plan", "agency", "department", "official",
    "resident", "neighbor", "family", "teacher", "parent", "principal", "superintendent", "curriculum", "library", "park",
    "hospital", "clinic", "nurse", "doctor", "patient", "vaccine", "program", "grant", "fund", "donation",
    "volunteer", "church", "pastor", "festival", "parade", "museum", "exhibit", "artist", "theater", "concert",
    "farmer", "crop", "harvest", "drought", "flood", "storm", "river", "dam", "water", "sewer",
    "pipeline", "utility", "rate", "bill", "court", "judge", "jury", "trial", "attorney", "lawsuit",
    "sheriff", "deputy", "investigation", "suspect", "witness", "victim", "fire", "firefighter", "ambulance", "crash",
    "highway", "traffic", "bus", "transit", "route", "election", "candidate", "ballot", "campaign", "voter",
    "housing", "rent", "landlord", "tenant", "shelter", "zoning", "developer", "factory", "plant", "worker",
    "union", "wage", "strike", "company", "shop", "owner", "customer", "economy", "sector", "house",
    "residence", "estate", "parcel", "cost", "amount", "firm", "diner", "academy", "campus", "pupil",
    "fuel", "motorist", "forecast", "citizen", "region", "neighborhood", "town", "position", "gathering", "guest",
    "agreement", "choice", "room", "garden", "study", "ranking", "match", "period", "incident", "license",
    "initiative", "worth", "crew", "critique", "evaluation", "assessment", "offense", "tourist", "commuter", "valuation",
];

pub const LN_VERBS: &[(&str, &str)] = &[
    ("approve", "approved"), ("reject", "rejected"), ("discuss", "discussed"), ("debate", "debated"),
    ("propose", "proposed"), ("delay", "delayed"), ("fund", "funded"), ("cut", "cut"), ("raise", "raised"),
    ("review", "reviewed"), ("say", "said"), ("explain", "explained"), ("argue", "argued"), ("warn", "warned"),
    ("confirm", "confirmed"), ("deny", "denied"), ("investigate", "investigated"), ("arrest", "arrested"),
    ("charge", "charged"), ("file", "filed"), ("settle", "settled"), ("build", "built"), ("repair", "repaired"),
    ("close", "closed"), ("expand", "expanded"), ("hire", "hired"), ("retire", "retired"), ("elect", "elected"),
    ("appoint", "appointed"), ("resign", "resigned"), ("damage", "damaged"), ("flood", "flooded"),
    ("rescue", "rescued"), ("treat", "treated"), ("vaccinate", "vaccinated"), ("teach", "taught"),
    ("graduate", "graduated"), ("perform", "performed"), ("celebrate", "celebrated"), ("honor", "honored"),
    ("donate", "donated"), ("collect", "collected"), ("plant", "planted"), ("harvest", "harvested"),
    ("negotiate", "negotiated"), ("sign", "signed"), ("study", "studied"), ("measure", "measured"),
    ("trade", "traded"), ("transfer", "transferred"), ("provide", "provided"), ("include", "included"),
    ("place", "placed"), ("receive", "received"), ("launch", "launched"), ("hold", "held"), ("note", "noted"),
    ("record", "recorded"), ("indicate", "indicated"), ("reveal", "revealed"), ("attain", "attained"),
    ("support", "supported"), ("secure", "secured"), ("publish", "published"), ("gather", "gathered"),
    ("lead", "led"), ("recruit", "recruited"), ("greet", "greeted"), ("present", "presented"), ("organize", "organized"),
];

pub const LN_ADJS: &[&str] = &[
    "local", "public", "federal", "annual", "former", "final", "initial", "rural", "municipal", "regional",
    "legal", "medical", "financial", "environmental", "historic", "temporary", "permanent", "previous", "recent",
    "current", "several", "additional", "significant", "notable", "modest", "reasonable", "large", "common",
    "unusual", "pleasant", "attractive", "solid", "substantial", "surprising", "leading", "major", "suitable",
    "interesting", "complete", "strong", "capable", "foremost", "striking", "quaint", "handsome", "lively",
];

pub const LN_ADVS: &[&str] = &[
    "later", "earlier", "still", "already", "again", "nearly", "roughly", "largely", "mostly", "lately",
    "newly", "presently", "additionally", "likewise", "often", "rarely",
];

pub const SUBORDINATORS: &[&str] = &["because", "while", "after", "when", "although", "before", "since", "if"];
