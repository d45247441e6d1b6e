#pragma once

#include <utility>
#include <vector>

// Reference ROC and PR operating characteristics (50 points each) with
// known area and Youden point; ground-truth fixtures for the curve
// metrics.
namespace pcib::testfix {

inline const std::vector<std::pair<double, double>>& reference_roc() {
    static const std::vector<std::pair<double, double>> pts = {
        {0.0000, 0.0000}, {0.0100, 0.0000}, {0.0200, 0.0200}, {0.0300, 0.0300},
        {0.0500, 0.0300}, {0.0600, 0.0400}, {0.0600, 0.1000}, {0.0600, 0.1100},
        {0.0600, 0.1400}, {0.0700, 0.3000}, {0.0700, 0.3300}, {0.0800, 0.3400},
        {0.0800, 0.3700}, {0.0800, 0.3900}, {0.0900, 0.4300}, {0.1000, 0.4600},
        {0.1000, 0.4900}, {0.1100, 0.5100}, {0.1100, 0.5600}, {0.1100, 0.5800},
        {0.1200, 0.5900}, {0.1400, 0.6000}, {0.1400, 0.6700}, {0.1500, 0.7200},
        {0.1600, 0.7300}, {0.1700, 0.7300}, {0.1800, 0.7400}, {0.1900, 0.7500},
        {0.1900, 0.7600}, {0.2500, 0.7700}, {0.2700, 0.7900}, {0.2900, 0.7900},
        {0.3400, 0.8000}, {0.3500, 0.8100}, {0.3500, 0.8300}, {0.3600, 0.8500},
        {0.4000, 0.8600}, {0.4900, 0.8600}, {0.5300, 0.8700}, {0.5500, 0.8900},
        {0.5500, 0.9100}, {0.5700, 0.9200}, {0.6100, 0.9300}, {0.7000, 0.9300},
        {0.8300, 0.9600}, {0.8700, 0.9700}, {0.8700, 0.9800}, {0.9300, 0.9800},
        {0.9900, 0.9900}, {1.0000, 1.0000}};
    return pts;
}

// (recall, precision), recall descending
inline const std::vector<std::pair<double, double>>& reference_pr() {
    static const std::vector<std::pair<double, double>> pts = {
        {1.0000, 0.5000}, {0.9900, 0.5025}, {0.9900, 0.5103}, {0.9800, 0.5213},
        {0.9800, 0.5297}, {0.9700, 0.5359}, {0.9600, 0.5393}, {0.9600, 0.5517},
        {0.9600, 0.5614}, {0.9600, 0.5749}, {0.9400, 0.5732}, {0.9300, 0.5813},
        {0.9300, 0.5924}, {0.9200, 0.6013}, {0.9200, 0.6133}, {0.9100, 0.6233},
        {0.8900, 0.6224}, {0.8700, 0.6259}, {0.8700, 0.6397}, {0.8600, 0.6515},
        {0.8600, 0.6667}, {0.8500, 0.6800}, {0.8500, 0.6967}, {0.8300, 0.7034},
        {0.8100, 0.7043}, {0.8000, 0.7207}, {0.7900, 0.7315}, {0.7700, 0.7404},
        {0.7600, 0.7525}, {0.7600, 0.7835}, {0.7500, 0.7979}, {0.7300, 0.8111},
        {0.7200, 0.8276}, {0.6800, 0.8193}, {0.6600, 0.8250}, {0.6200, 0.8158},
        {0.5900, 0.8194}, {0.5700, 0.8382}, {0.5200, 0.8254}, {0.4900, 0.8305},
        {0.4500, 0.8333}, {0.4200, 0.8400}, {0.3900, 0.8298}, {0.3300, 0.8049},
        {0.3100, 0.8158}, {0.1300, 0.6842}, {0.0600, 0.5000}, {0.0300, 0.4286},
        {0.0200, 0.5000}, {0.0000, 1.0000}};
    return pts;
}

}  // namespace pcib::testfix
