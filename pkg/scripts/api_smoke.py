"""
Smoke test against a running API (python cli.py serve, or python main.py).

    python scripts/api_smoke.py [base_url]
"""
import asyncio
import sys

import httpx

BASE_URL = "http://localhost:8000"


async def check_health(client: httpx.AsyncClient) -> bool:
    print("=== Health ===")
    response = await client.get("/")
    body = response.json()
    print(f"response: {body}")
    passed = response.status_code == 200 and body.get("status") == "running"
    print(f"passed: {passed}\n")
    return passed


async def check_diamond(client: httpx.AsyncClient) -> bool:
    print("=== Diamond ===")
    cases = [
        {"input": {"p": [0, 0, 0, 0], "q": [1, 0, 0, 0]}, "expected": {"kind": "bounded", "N": 1}},
        {"input": {"p": [0, 0, 0, 0], "q": [0, 0, 0, 0]}, "expected": {"kind": "point"}},
        {"input": {"p": [1, 0, 0, 0], "q": [0, 0, 0, 0]}, "expected": {"kind": "empty"}},
    ]
    ok = True
    for case in cases:
        response = await client.post("/diamond", json=case["input"])
        body = response.json()
        passed = all(body.get(k) == v for k, v in case["expected"].items())
        ok = ok and passed
        print(f"diamond: {case['input']}")
        print(f"response: {body}")
        print(f"passed: {passed}\n")
    return ok


async def check_spikes(client: httpx.AsyncClient) -> bool:
    print("=== Spike table ===")
    response = await client.get("/potential/spikes", params={"n_max": 5})
    body = response.json()
    centers = [s["center_left"] for s in body.get("spikes", [])]
    passed = len(centers) == 5 and abs(centers[0] - 3.1213203435596424) < 1e-12 and body["summability"]["verdict"] == "pass"
    print(f"centers: {centers}")
    print(f"passed: {passed}\n")
    return passed


async def check_weyl(client: httpx.AsyncClient) -> bool:
    print("=== Weyl classification ===")
    cases = [
        ({"p_y": 1.0, "p_z": 1.0, "p_eta": 1.0}, "LimitCircle"),
        ({"p_y": 1.0, "p_z": 0.0, "p_eta": 1.0}, "LimitPoint"),
    ]
    ok = True
    for params, expected in cases:
        response = await client.post("/weyl", json=params, timeout=600.0)
        body = response.json()
        passed = body.get("classification") == expected
        ok = ok and passed
        print(f"weyl: {params}")
        print(f"response: {body.get('classification')} deficiency={body.get('deficiency')}")
        print(f"passed: {passed}\n")
    return ok


async def main(base_url: str) -> int:
    async with httpx.AsyncClient(base_url=base_url, timeout=60.0) as client:
        results = [
            await check_health(client),
            await check_diamond(client),
            await check_spikes(client),
            await check_weyl(client),
        ]
    return 0 if all(results) else 1


if __name__ == "__main__":
    sys.exit(asyncio.run(main(sys.argv[1] if len(sys.argv) > 1 else BASE_URL)))
