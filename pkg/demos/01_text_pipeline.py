"""Walk through the text pipeline: normalize -> tokenize -> stem.

Run:  python demos/01_text_pipeline.py
"""

from hatenet import RawPost, normalize, preprocess, stem, tokenize

posts = [
    "@alice check https://t.co/xyz #ClimateAction now \U0001F600",
    "These RUNNING dogs won't stop barking!!!",
    "caresses, ponies, ties... all get stemmed",
]

for text in posts:
    print(f"raw:        {text!r}")
    norm = normalize(text)
    print(f"normalized: {norm!r}")
    tokens = tokenize(norm)
    print(f"tokens:     {tokens}")
    print(f"stems:      {[stem(t) for t in tokens]}")
    print()

print("one-call preprocess keeps stems and surface forms aligned:")
seq = preprocess(RawPost("@bob the RUNNERS are #Winning"))
for surface, stemmed in zip(seq.surfaces, seq.tokens):
    print(f"  {surface:>12} -> {stemmed}")

print("\nnormalize is idempotent:")
once = normalize(posts[0])
print(f"  normalize(normalize(x)) == normalize(x): {normalize(once) == once}")
