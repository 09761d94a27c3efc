#pragma once

// Fully assembled problem instance shared by the forward, sensitivity and
// control modules. Immutable after construction.

#include <vector>

#include "seirdiff/grid.hpp"
#include "seirdiff/model.hpp"

namespace seirdiff {

struct Scenario {
    Domain domain;
    std::vector<Face> faces;
    SubdomainPartition partition;
    TimeGrid time;
    Parameters params;
    TransmissionRate rates;
    InitialData init;

    Scenario(Domain d, SubdomainPartition part, TimeGrid tg, Parameters p,
             TransmissionRate r, InitialData data)
        : domain(d), faces(build_faces(d)), partition(std::move(part)), time(tg),
          params(std::move(p)), rates(std::move(r)), init(std::move(data)) {
        params.validate();
        init.validate(domain.cell_count());
        if (rates.has_multiplier())
            require(static_cast<int>(rates.multiplier().size()) == domain.cell_count(),
                    "transmission multiplier field does not match grid");
    }

    int cell_count() const { return domain.cell_count(); }
    double dt() const { return time.dt(); }

    double initial_n_max() const {
        double m = 0.0;
        const Field n = total_population(init.fields);
        for (double v : n) m = std::max(m, v);
        return m;
    }

    double dt_safe() const { return dt_safe_bound(params, rates, initial_n_max()); }
};

} // namespace seirdiff
