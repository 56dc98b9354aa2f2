"""Bundled English stopword list (function words plus common web boilerplate)."""

ENGLISH_STOPWORDS = frozenset("""
a about above after again against all almost also although always am among an and another any
anyone anything are around as at be because been before being below between both but by can
cannot could did do does doing done during each either else enough etc even ever every
few for from further get gets got had has have having he her here hers herself him himself his
how however i if in into is it its itself just least less like made make many may me might
more most much must my myself neither never no nor not now of off often on once one only or
other others our ours ourselves out over own per perhaps quite rather really said same see
seem seems several shall she should since so some something such than that the their theirs
them themselves then there these they this those though through thus to too under until up
upon us use used using very via was we well were what whatever when where whether which while
who whom whose why will with within without would yet you your yours yourself yourselves
ago already anyway becomes besides came come given go goes let next onto toward towards
""".split())
