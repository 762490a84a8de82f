"""Bundled seed texts for building synthetic topic-word distributions.

Four short original paragraphs on deliberately distant subjects
(astronomy, gardening, railways, baking).  Benchmarks only need the
derived topics to be distinct, not any particular real-world corpus.
"""

ASTRONOMY = """
The telescope gathers faint starlight from distant galaxies and nebulae.
Astronomers chart orbits of planets and comets, measure the parallax of
nearby stars, and catalogue clusters scattered across the night sky. A
supernova briefly outshines its whole galaxy before fading into an
expanding shell of glowing gas. Radio dishes listen for pulsars whose
beams sweep past like lighthouse flashes, while spectrographs split light
into lines that reveal hydrogen, helium and heavier elements forged in
stellar furnaces. Dark dust lanes hide newborn suns; infrared cameras
peer through the veil to watch protostars ignite. Gravity bends passing
light around massive clusters, magnifying the faintest most remote
objects the observatory can record on a clear moonless night.
"""

GARDENING = """
The gardener turns compost into the bed before sowing seeds of lettuce,
carrot and beetroot in shallow drills. Seedlings are thinned, watered and
mulched so roots stay cool through dry weeks. Roses need pruning above an
outward bud, while tomatoes are pinched and tied to canes as trusses
swell. Bees visit blossom on the apple and plum trees, setting fruit that
ripens through late summer. Slugs hide beneath damp leaves, so the careful
grower lays barriers of grit around tender hostas. Perennials are divided
in autumn, bulbs planted deep for spring colour, and the greenhouse
scrubbed so overwintering cuttings escape mould. Rich soil, steady
moisture and patient weeding reward the allotment with baskets of
vegetables and armfuls of cut flowers.
"""

RAILWAYS = """
The locomotive eases out of the junction as the signaller clears the home
signal and the points swing across the ballast. Steam pressure climbs in
the boiler, the fireman spreads coal evenly over the grate, and the
driver watches the gauge while coupling rods turn the driving wheels.
Freight wagons wait in the siding for a pathway between express services;
a banking engine waits to shove heavy trains up the incline. Platelayers
walk the track inspecting sleepers, fishplates and rail joints for wear.
In the cutting, the rhythm of wheels over joints echoes off the
embankment until the viaduct carries the line across the valley. At the
terminus the shunter uncouples the carriages and the tank engine runs
round its train for the return working.
"""

BAKING = """
The baker folds the dough gently over itself, letting gluten develop as
the sourdough starter ferments overnight. Flour, water, salt and a spoon
of honey make a sticky mixture that rises slowly in the cool pantry.
Kneading builds strength; proofing in a floured basket gives the loaf its
shape. The oven is heated with a baking stone until it holds a fierce
steady warmth, and a tray of water adds steam so the crust blisters and
crackles. Scoring the top lets the crumb spring open along the cut.
Butter, sugar and eggs are creamed for sponge cakes, while pastry is
rested cold so the layers stay flaky. When the loaf sounds hollow beneath
a tap it cools on a wire rack before slicing.
"""

DEFAULT_SEED_TEXTS = [ASTRONOMY, GARDENING, RAILWAYS, BAKING]


def default_seed_texts() -> list[str]:
    """Return copies of the bundled seed texts."""
    return list(DEFAULT_SEED_TEXTS)
