//! Route enumeration on the bundled fixture network.
//!
//! Finds every reasonable itinerary between station pairs, ranked by total
//! distance, and shows the estimated transfer moments for a concrete trip.
//!
//! ```text
//! cargo run -p metroflow --example route_search
//! ```

use chrono::NaiveDate;
use metroflow::network::{best_route, enumerate_routes, RouteQuery};
use metroflow::synth::fixture_network;

fn main() -> metroflow::Result<()> {
    let net = fixture_network();
    println!(
        "fixture network: {} stations, {} edges, hubs = {:?}\n",
        net.station_count(),
        net.edges().len(),
        net.station_codes()
            .filter(|c| net.is_transfer_station(c))
            .collect::<Vec<_>>()
    );

    for (origin, destination) in [("S08", "S07"), ("S12", "S15"), ("S01", "S04")] {
        println!("{origin} -> {destination}");
        let routes = enumerate_routes(&net, origin, destination, RouteQuery::default())?;
        for (rank, route) in routes.iter().enumerate() {
            let legs: Vec<String> = route
                .legs
                .iter()
                .map(|l| format!("{} [{}] {}", l.stations[0], l.line, l.stations.last().unwrap()))
                .collect();
            println!(
                "  #{} {:>6.0} m, {} transfer(s): {}",
                rank + 1,
                route.total_distance,
                route.transfer_count(),
                legs.join(" -> ")
            );
        }
        println!();
    }

    // Transfer moments are estimated hop-proportionally between the swipes.
    let route = best_route(&net, "S08", "S07")?;
    let day = NaiveDate::from_ymd_opt(2024, 3, 4).unwrap();
    let t_on = day.and_hms_opt(8, 0, 0).unwrap();
    let t_off = day.and_hms_opt(8, 40, 0).unwrap();
    println!("tap in 08:00, tap out 08:40 on the best S08 -> S07 route:");
    for (station, moment) in route.transfer_times(t_on, t_off)? {
        println!("  transfer at {station} around {}", moment.format("%H:%M:%S"));
    }
    Ok(())
}
