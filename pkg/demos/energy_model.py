"""Walk through the per-round energy model.

Builds a small population, prices one round of participation for every
UE, and shows how the transmit term reacts to the rate threshold while
the compute term stays fixed by the hardware draw.
"""

from fedsched.energy import data_rate, round_breakdown, transmit_energy
from fedsched.scenario import (
    ScenarioConfig,
    draw_channels,
    generate_population,
    path_gain_linear,
)


def main():
    config = ScenarioConfig(K=8, N=3, seed=7)
    profiles = generate_population(config)
    channels = draw_channels(config, profiles, round_index=0)

    print("population (distance draws fix the average channel gain):")
    for p in profiles:
        print(f"  ue {p.ue_id}: d={p.distance_m:6.1f} m  "
              f"D={p.data_size_bits:>9d} bits  f={p.cpu_freq_hz / 1e9:4.2f} GHz  "
              f"gain={channels.gains[p.ue_id]:8.2e}")

    breakdown = round_breakdown(profiles, channels,
                                config.model_size_bits, kappa=config.kappa)
    print("\nper-UE energy for this round (J):")
    for p in profiles:
        i = p.ue_id
        print(f"  ue {i}: transmit={breakdown.transmit_j[i]:12.4f}  "
              f"compute={breakdown.compute_j[i]:8.6f}  "
              f"total={breakdown.per_ue_total_j[i]:12.4f}")

    # Demanding a faster upload costs more than linearly: the required
    # power grows like expm1(rate / bandwidth), so past rate ~ bandwidth
    # the exponential takes over.
    gain = path_gain_linear(20.0)
    bandwidth = config.subchannel_bandwidth_hz
    base_rate = config.rate_threshold_bps
    print(f"\nfull-model upload at 20 m on a {bandwidth / 1e6:.2f} MHz "
          f"subchannel (default demand {base_rate / 1e6:.2f} Mbit/s):")
    for mult in (0.5, 1, 2, 10, 50):
        rate = mult * base_rate
        e = transmit_energy(config.model_size_bits, rate, gain,
                            bandwidth, config.noise_w)
        print(f"  {mult:4.1f}x demand (rate/bandwidth={rate / bandwidth:6.2f}): "
              f"{e:14.4f} J")

    # A demand so far past the bandwidth that exp() would overflow a
    # double is rejected outright instead of returning inf.
    try:
        transmit_energy(config.model_size_bits, 800 * bandwidth, gain,
                        bandwidth, config.noise_w)
    except OverflowError as err:
        print(f"\nrejected impossible demand: {err}")

    # The inverse view: the rate a fixed transmit power supports.
    for power_w in (0.1, 100.0, 2000.0):
        rate = data_rate(power_w, gain, bandwidth, config.noise_w)
        print(f"at {power_w:7.1f} W the same channel carries "
              f"{rate / 1e6:7.3f} Mbit/s")


if __name__ == "__main__":
    main()
